"""Relation schemas, view definitions and the FK-directed join graphs over them.

Identifiers are matched case-insensitively (SQL convention) but every object
keeps the spelling it was declared with.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from typing import Iterable, Mapping

import networkx as nx

from . import predicates as P
from .errors import (
    CatalogError,
    DuplicateNameError,
    ForeignKeyCycleError,
    IntegrityError,
    UnknownRelationError,
    ViewError,
)

DOMAINS = ("integer", "decimal", "text")


@dataclass(frozen=True)
class AttributeDef:
    name: str
    domain: str
    length: int | None = None  # only for text(n)

    def __post_init__(self):
        if self.domain not in DOMAINS:
            raise CatalogError(f"attribute {self.name}: unknown domain {self.domain!r}")
        if self.domain == "text":
            if self.length is None or self.length < 1:
                raise CatalogError(f"attribute {self.name}: text needs a positive length")
        elif self.length is not None:
            raise CatalogError(f"attribute {self.name}: only text takes a length")

    @property
    def byte_width(self) -> int:
        if self.domain == "integer":
            return 4
        if self.domain == "decimal":
            return 8
        return self.length

    @property
    def sql_type(self) -> str:
        if self.domain == "text":
            return f"TEXT({self.length})"
        return self.domain.upper()

    def coerce(self, value: object) -> object:
        """Check ``value`` against the domain, returning its canonical form."""
        if self.domain == "integer":
            if isinstance(value, int) and not isinstance(value, bool):
                return value
        elif self.domain == "decimal":
            if isinstance(value, Decimal):
                return value
            if isinstance(value, int) and not isinstance(value, bool):
                return Decimal(value)
        elif isinstance(value, str):
            if len(value.encode("utf-8")) > self.length:
                raise IntegrityError(
                    f"{self.name}: {value!r} exceeds TEXT({self.length})"
                )
            return value
        raise IntegrityError(f"{self.name}: {value!r} is not a valid {self.sql_type}")

    def parse(self, text: str) -> object:
        """Read a value from its CSV form."""
        try:
            if self.domain == "integer":
                return int(text)
            if self.domain == "decimal":
                return Decimal(text)
        except (ValueError, InvalidOperation):
            raise IntegrityError(f"{self.name}: cannot read {text!r} as {self.sql_type}") from None
        return self.coerce(text)


@dataclass(frozen=True)
class ForeignKey:
    attributes: tuple[str, ...]
    target: str
    target_attributes: tuple[str, ...]

    @property
    def pairs(self) -> tuple[tuple[str, str], ...]:
        return tuple(zip(self.attributes, self.target_attributes))


@dataclass(frozen=True)
class RelationDef:
    name: str
    attributes: tuple[AttributeDef, ...]
    primary_key: tuple[str, ...]
    foreign_keys: tuple[ForeignKey, ...] = ()

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.attributes)

    def find(self, name: str) -> AttributeDef | None:
        low = name.lower()
        for attr in self.attributes:
            if attr.name.lower() == low:
                return attr
        return None

    def attribute(self, name: str) -> AttributeDef:
        attr = self.find(name)
        if attr is None:
            raise CatalogError(f"relation {self.name} has no attribute {name!r}")
        return attr

    def index(self, name: str) -> int:
        return self.names.index(self.attribute(name).name)

    def width(self, names: Iterable[str]) -> int:
        return sum(self.attribute(n).byte_width for n in names)

    def ordered(self, names: Iterable[str]) -> tuple[str, ...]:
        """``names`` sorted into declaration order."""
        wanted = {self.attribute(n).name for n in names}
        return tuple(n for n in self.names if n in wanted)


@dataclass(frozen=True, eq=False)
class Catalog:
    relations: Mapping[str, RelationDef] = field(default_factory=dict)

    def __post_init__(self):
        _validate_catalog(self)

    def __eq__(self, other):
        if not isinstance(other, Catalog):
            return NotImplemented
        return dict(self.relations) == dict(other.relations)

    def __contains__(self, name: str) -> bool:
        return self.find(name) is not None

    def find(self, name: str) -> RelationDef | None:
        low = name.lower()
        for rel in self.relations.values():
            if rel.name.lower() == low:
                return rel
        return None

    def relation(self, name: str) -> RelationDef:
        rel = self.find(name)
        if rel is None:
            raise UnknownRelationError(f"unknown relation {name!r}")
        return rel

    def fk_graph(self) -> nx.DiGraph:
        """Edge ``A -> B`` whenever A holds a foreign key into B."""
        g = nx.DiGraph()
        g.add_nodes_from(sorted(self.relations))
        for rel in self.relations.values():
            for fk in rel.foreign_keys:
                g.add_edge(rel.name, fk.target)
        return g

    def topological_order(self) -> list[str]:
        """Referenced relations first; ties broken by name."""
        return list(nx.lexicographical_topological_sort(self.fk_graph().reverse()))


def _validate_catalog(catalog: Catalog) -> None:
    seen: dict[str, str] = {}
    for key, rel in catalog.relations.items():
        if key != rel.name:
            raise CatalogError(f"relation registered as {key!r} but named {rel.name!r}")
        low = rel.name.lower()
        if low in seen:
            raise DuplicateNameError(f"duplicate relation {rel.name!r}")
        seen[low] = rel.name
        names = [a.name.lower() for a in rel.attributes]
        for n in names:
            if names.count(n) > 1:
                raise DuplicateNameError(f"duplicate attribute {n!r} in {rel.name}")
        if not rel.primary_key:
            raise CatalogError(f"relation {rel.name} has no primary key")
        for n in rel.primary_key:
            if rel.find(n) is None:
                raise CatalogError(f"primary key attribute {n!r} not in {rel.name}")
    for rel in catalog.relations.values():
        for fk in rel.foreign_keys:
            target = catalog.find(fk.target)
            if target is None:
                raise UnknownRelationError(
                    f"unknown FK target {fk.target!r} referenced from {rel.name}"
                )
            if len(fk.attributes) != len(fk.target_attributes):
                raise CatalogError(f"{rel.name}: FK arity mismatch into {target.name}")
            if {a.lower() for a in fk.target_attributes} != {
                a.lower() for a in target.primary_key
            } or len(fk.target_attributes) != len(target.primary_key):
                raise CatalogError(
                    f"{rel.name}: FK into {target.name} must reference its full primary key"
                )
            for local, remote in fk.pairs:
                la = rel.find(local)
                if la is None:
                    raise CatalogError(f"FK attribute {local!r} not in {rel.name}")
                ra = target.attribute(remote)
                if la.domain != ra.domain:
                    raise CatalogError(
                        f"{rel.name}.{la.name} ({la.sql_type}) cannot reference "
                        f"{target.name}.{ra.name} ({ra.sql_type})"
                    )
    try:
        cycle = nx.find_cycle(catalog.fk_graph())
    except nx.NetworkXNoCycle:
        return
    path = " -> ".join(u for u, _ in cycle) + f" -> {cycle[0][0]}"
    raise ForeignKeyCycleError(f"foreign keys form a cycle: {path}")


def make_catalog(relations: Iterable[RelationDef]) -> Catalog:
    """Build a validated catalog, normalising FK spellings to the declared names."""
    rels = list(relations)
    by_low: dict[str, RelationDef] = {}
    for rel in rels:
        if rel.name.lower() in by_low:
            raise DuplicateNameError(f"duplicate relation {rel.name!r}")
        by_low[rel.name.lower()] = rel
    fixed = {}
    for rel in rels:
        fks = []
        for fk in rel.foreign_keys:
            target = by_low.get(fk.target.lower())
            if target is None:
                raise UnknownRelationError(
                    f"unknown FK target {fk.target!r} referenced from {rel.name}"
                )
            attrs = tuple(_canon(rel, a) for a in fk.attributes)
            tattrs = tuple(_canon(target, a) for a in fk.target_attributes) or target.primary_key
            fks.append(ForeignKey(attrs, target.name, tattrs))
        pk = tuple(_canon(rel, a) for a in rel.primary_key)
        fixed[rel.name] = RelationDef(rel.name, rel.attributes, pk, tuple(fks))
    return Catalog(fixed)


def _canon(rel: RelationDef, name: str) -> str:
    attr = rel.find(name)
    return attr.name if attr is not None else name


# ---------------------------------------------------------------------------
# Views
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class JoinEdge:
    """An equijoin instantiating ``child``'s foreign key into ``parent``."""

    child: str
    parent: str
    fk: ForeignKey

    @property
    def pairs(self) -> tuple[tuple[str, str], ...]:
        return self.fk.pairs

    def side(self, relation: str) -> tuple[str, ...]:
        """Join attributes on ``relation``'s side of the edge."""
        if relation == self.child:
            return self.fk.attributes
        if relation == self.parent:
            return self.fk.target_attributes
        raise ValueError(f"{relation} is not an endpoint of {self}")


@dataclass(frozen=True, eq=False)
class ViewDef:
    name: str
    relations: tuple[str, ...]
    joins: tuple[JoinEdge, ...]
    local_predicates: Mapping[str, P.Predicate]
    output: tuple[tuple[str, str], ...]

    def __eq__(self, other):
        if not isinstance(other, ViewDef):
            return NotImplemented
        return (
            self.name == other.name
            and self.relations == other.relations
            and self.joins == other.joins
            and dict(self.local_predicates) == dict(other.local_predicates)
            and self.output == other.output
        )

    def __hash__(self):
        return hash((self.name, self.relations, self.joins, self.output))

    @property
    def output_columns(self) -> tuple[str, ...]:
        return tuple(f"{r}.{a}" for r, a in self.output)

    def local(self, relation: str) -> P.Predicate | None:
        return self.local_predicates.get(relation)

    def output_of(self, relation: str) -> tuple[str, ...]:
        return tuple(a for r, a in self.output if r == relation)

    def edges_of(self, relation: str) -> list[JoinEdge]:
        return [e for e in self.joins if relation in (e.child, e.parent)]


def validate_view(catalog: Catalog, view: ViewDef) -> None:
    """Raise :class:`ViewError` unless ``view`` is a connected FK-equijoin view."""
    if not view.relations:
        raise ViewError(f"view {view.name} has no relations")
    for r in view.relations:
        if r not in catalog.relations:
            raise ViewError(f"view {view.name}: unknown relation {r!r}")
    if len({r.lower() for r in view.relations}) != len(view.relations):
        raise ViewError(f"view {view.name}: a relation may appear only once")
    members = set(view.relations)
    for edge in view.joins:
        if edge.child not in members or edge.parent not in members:
            raise ViewError(f"view {view.name}: join {edge} leaves the view")
        if edge.fk not in catalog.relations[edge.child].foreign_keys or (
            edge.fk.target != edge.parent
        ):
            raise ViewError(f"view {view.name}: join does not match declared FK: {edge}")
    for rel, pred in view.local_predicates.items():
        if rel not in members:
            raise ViewError(f"view {view.name}: predicate on foreign relation {rel}")
        if P.memberships(pred):
            raise ViewError(f"view {view.name}: memberships are not allowed in views")
        schema = catalog.relations[rel]
        for attr in P.attributes(pred):
            if attr not in schema.names:
                raise ViewError(f"view {view.name}: {rel} has no attribute {attr!r}")
    if not view.output:
        raise ViewError(f"view {view.name}: empty select list")
    if len(set(view.output)) != len(view.output):
        raise ViewError(f"view {view.name}: duplicate output attribute")
    for rel, attr in view.output:
        if rel not in members or attr not in catalog.relations[rel].names:
            raise ViewError(f"view {view.name}: attribute not found: {rel}.{attr}")
    g = nx.Graph()
    g.add_nodes_from(view.relations)
    g.add_edges_from((e.child, e.parent) for e in view.joins)
    if not nx.is_connected(g):
        parts = sorted(sorted(c) for c in nx.connected_components(g))
        raise ViewError(f"view {view.name}: disconnected join graph {parts}")


def view_join_digraph(catalog: Catalog, view: ViewDef) -> nx.MultiDiGraph:
    """Nodes are the view's relations; one edge child -> parent per join."""
    g = nx.MultiDiGraph()
    g.add_nodes_from(view.relations)
    for edge in view.joins:
        g.add_edge(edge.child, edge.parent, key=edge.fk.attributes, edge=edge)
    return g


def view_order(catalog: Catalog, view: ViewDef) -> list[str]:
    """The view's relations in catalog topological order (referenced first)."""
    members = set(view.relations)
    return [r for r in catalog.topological_order() if r in members]


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------


def render_schema(catalog: Catalog) -> str:
    """DDL text that :func:`viewkeeper.sqlparse.parse_schema` reads back."""
    chunks = []
    for name in catalog.topological_order():
        rel = catalog.relations[name]
        items = [f"  {a.name} {a.sql_type}" for a in rel.attributes]
        items.append(f"  PRIMARY KEY ({', '.join(rel.primary_key)})")
        for fk in rel.foreign_keys:
            items.append(
                f"  FOREIGN KEY ({', '.join(fk.attributes)}) REFERENCES "
                f"{fk.target}({', '.join(fk.target_attributes)})"
            )
        chunks.append(f"CREATE TABLE {rel.name} (\n" + ",\n".join(items) + "\n);\n")
    return "\n".join(chunks)


def render_view(view: ViewDef) -> str:
    select = ",\n       ".join(view.output_columns)
    conds = []
    for e in view.joins:
        for a, b in e.pairs:
            conds.append(f"{e.child}.{a} = {e.parent}.{b}")
    for rel in view.relations:
        pred = view.local(rel)
        if pred is not None:
            text = P.render(pred, rel)
            conds.append(f"({text})" if isinstance(pred, P.Or) else text)
    text = f"CREATE VIEW {view.name} AS\nSELECT {select}\nFROM {', '.join(view.relations)}"
    if conds:
        text += "\nWHERE " + "\n  AND ".join(conds)
    return text + ";\n"
