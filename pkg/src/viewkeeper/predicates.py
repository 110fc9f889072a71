"""Predicate trees used for local selections and semijoin memberships.

A predicate is scoped to a single relation: comparisons name attributes of
that relation only, and a :class:`Membership` tests whether a tuple of the
relation's attributes appears in the key set of a named auxiliary view.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass
from decimal import Decimal
from typing import Callable, Iterable, Iterator, Sequence, Union

OPERATORS: dict[str, Callable[[object, object], bool]] = {
    "=": operator.eq,
    "<>": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}

# operator obtained when the two sides of a comparison are swapped
FLIPPED = {"=": "=", "<>": "<>", "<": ">", "<=": ">=", ">": "<", ">=": "<="}


@dataclass(frozen=True)
class Comparison:
    attribute: str
    op: str
    value: object

    def __post_init__(self):
        if self.op not in OPERATORS:
            raise ValueError(f"unsupported comparison operator {self.op!r}")


@dataclass(frozen=True)
class Membership:
    """``(attributes) IN (SELECT target_attributes FROM av)``."""

    attributes: tuple[str, ...]
    av: str
    target_attributes: tuple[str, ...]


@dataclass(frozen=True)
class And:
    terms: tuple["Predicate", ...]


@dataclass(frozen=True)
class Or:
    terms: tuple["Predicate", ...]


Predicate = Union[Comparison, Membership, And, Or]

# Resolves (av name, target attributes) to the set of keys present in that AV.
KeyLookup = Callable[[str, tuple[str, ...]], set]


def conjoin(terms: Iterable[Predicate | None]) -> Predicate | None:
    """AND together the non-empty terms, flattening nested conjunctions."""
    flat: list[Predicate] = []
    for term in terms:
        if term is None:
            continue
        if isinstance(term, And):
            flat.extend(term.terms)
        else:
            flat.append(term)
    if not flat:
        return None
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def disjoin(terms: Iterable[Predicate | None]) -> Predicate | None:
    """OR together the terms. A missing term means TRUE, which absorbs the rest."""
    flat: list[Predicate] = []
    for term in terms:
        if term is None:
            return None
        if isinstance(term, Or):
            flat.extend(term.terms)
        elif term not in flat:
            flat.append(term)
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat))


def walk(pred: Predicate | None) -> Iterator[Predicate]:
    if pred is None:
        return
    yield pred
    if isinstance(pred, (And, Or)):
        for term in pred.terms:
            yield from walk(term)


def attributes(pred: Predicate | None) -> set[str]:
    """Every attribute a predicate needs to be evaluated."""
    found: set[str] = set()
    for node in walk(pred):
        if isinstance(node, Comparison):
            found.add(node.attribute)
        elif isinstance(node, Membership):
            found.update(node.attributes)
    return found


def memberships(pred: Predicate | None) -> list[Membership]:
    return [node for node in walk(pred) if isinstance(node, Membership)]


def compile_predicate(
    pred: Predicate | None,
    columns: Sequence[str],
    lookup: KeyLookup | None = None,
) -> Callable[[tuple], bool]:
    """Turn ``pred`` into a row test over tuples laid out as ``columns``.

    Membership key sets are fetched once, at compile time.
    """
    if pred is None:
        return lambda row: True
    position = {name: i for i, name in enumerate(columns)}

    def build(node: Predicate) -> Callable[[tuple], bool]:
        if isinstance(node, Comparison):
            if node.attribute not in position:
                raise KeyError(f"attribute {node.attribute!r} not in {tuple(columns)}")
            i = position[node.attribute]
            fn = OPERATORS[node.op]
            value = node.value
            return lambda row: fn(row[i], value)
        if isinstance(node, Membership):
            if lookup is None:
                raise KeyError(f"no extent available for membership in {node.av!r}")
            keys = lookup(node.av, node.target_attributes)
            idx = [position[a] for a in node.attributes]
            if len(idx) == 1:
                j = idx[0]
                return lambda row: row[j] in keys
            return lambda row: tuple(row[j] for j in idx) in keys
        parts = [build(t) for t in node.terms]
        if isinstance(node, And):
            return lambda row: all(p(row) for p in parts)
        return lambda row: any(p(row) for p in parts)

    return build(pred)


def render_value(value: object) -> str:
    if isinstance(value, str):
        escaped = value.replace("'", "''")
        return f"'{escaped}'"
    if isinstance(value, Decimal):
        return str(value)
    return repr(value)


def render(pred: Predicate | None, qualifier: str | None = None) -> str:
    """SQL text for a predicate; ``qualifier`` prefixes attribute names."""
    if pred is None:
        return "TRUE"

    def name(attr: str) -> str:
        return f"{qualifier}.{attr}" if qualifier else attr

    def go(node: Predicate, nested: bool) -> str:
        if isinstance(node, Comparison):
            return f"{name(node.attribute)} {node.op} {render_value(node.value)}"
        if isinstance(node, Membership):
            lhs = ", ".join(name(a) for a in node.attributes)
            rhs = ", ".join(node.target_attributes)
            if len(node.attributes) > 1:
                lhs = f"({lhs})"
            return f"{lhs} IN (SELECT {rhs} FROM {node.av})"
        joiner = " AND " if isinstance(node, And) else " OR "
        text = joiner.join(go(t, True) for t in node.terms)
        return f"({text})" if nested else text

    return go(pred, False)


def to_json(pred: Predicate | None) -> object:
    if pred is None:
        return None
    if isinstance(pred, Comparison):
        value = pred.value
        if isinstance(value, Decimal):
            value = {"decimal": str(value)}
        return {"cmp": [pred.attribute, pred.op, value]}
    if isinstance(pred, Membership):
        return {"in": [list(pred.attributes), pred.av, list(pred.target_attributes)]}
    key = "and" if isinstance(pred, And) else "or"
    return {key: [to_json(t) for t in pred.terms]}


def from_json(data: object) -> Predicate | None:
    if data is None:
        return None
    assert isinstance(data, dict) and len(data) == 1
    (key, body), = data.items()
    if key == "cmp":
        attr, op, value = body
        if isinstance(value, dict):
            value = Decimal(value["decimal"])
        return Comparison(attr, op, value)
    if key == "in":
        attrs, av, target = body
        return Membership(tuple(attrs), av, tuple(target))
    terms = tuple(from_json(t) for t in body)
    return And(terms) if key == "and" else Or(terms)
