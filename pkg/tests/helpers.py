"""Independent oracles and random-instance builders shared by the tests.

Nothing here calls the package's evaluators: joins are nested loops over
plain dicts and predicates go through a separate operator table.
"""

from __future__ import annotations

import gc
import operator
import random
import types
from dataclasses import dataclass
from decimal import Decimal

from viewkeeper import predicates as P
from viewkeeper.catalog import Catalog, ViewDef
from viewkeeper.relstore import Database, Table, insert_batch
from viewkeeper.sqlparse import parse_schema, parse_view

OPS = {
    "=": operator.eq,
    "<>": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}


def holds(pred, row: dict, env_rows: dict | None = None) -> bool:
    """Evaluate a predicate over ``row`` (attribute -> value) by plain recursion."""
    if pred is None:
        return True
    if isinstance(pred, P.Comparison):
        return OPS[pred.op](row[pred.attribute], pred.value)
    if isinstance(pred, P.And):
        return all(holds(t, row, env_rows) for t in pred.terms)
    if isinstance(pred, P.Or):
        return any(holds(t, row, env_rows) for t in pred.terms)
    if isinstance(pred, P.Membership):
        probe = tuple(row[a] for a in pred.attributes)
        target = env_rows[pred.av]
        return any(tuple(t[a] for a in pred.target_attributes) == probe for t in target)
    raise TypeError(pred)


def _dict_rows(db: Database, relation: str) -> list[dict]:
    schema = db.catalog.relations[relation]
    return [dict(zip(schema.names, row)) for row in db.tables[relation].rows.values()]


def brute_force_view(db: Database, view: ViewDef) -> set[tuple]:
    """SPJ result by nested loops in the view's FROM order, checking each
    condition as soon as every relation it mentions is bound."""
    rels = list(view.relations)
    data = {r: _dict_rows(db, r) for r in rels}
    checks_at: list[list] = [[] for _ in rels]
    pos = {r: i for i, r in enumerate(rels)}
    for edge in view.joins:
        checks_at[max(pos[edge.child], pos[edge.parent])].append(("join", edge))
    for rel, pred in view.local_predicates.items():
        checks_at[pos[rel]].append(("local", rel, pred))
    out: set[tuple] = set()

    def ok(check, bound) -> bool:
        if check[0] == "join":
            e = check[1]
            return all(bound[e.child][a] == bound[e.parent][b] for a, b in e.pairs)
        return holds(check[2], bound[check[1]])

    def rec(i: int, bound: dict) -> None:
        if i == len(rels):
            out.add(tuple(bound[r][a] for r, a in view.output))
            return
        for row in data[rels[i]]:
            bound[rels[i]] = row
            if all(ok(c, bound) for c in checks_at[i]):
                rec(i + 1, bound)
        bound.pop(rels[i], None)

    rec(0, {})
    return out


def brute_force_av(db: Database, av, env_rows: dict[str, list[dict]]) -> set[tuple]:
    """pi_retained sigma_condition over the source, memberships by linear scan."""
    out = set()
    for row in _dict_rows(db, av.source_relation):
        if holds(av.condition, row, env_rows):
            out.add(tuple(row[a] for a in av.attributes))
    return out


def brute_force_avset(db: Database, avset) -> dict[str, set[tuple]]:
    env_rows: dict[str, list[dict]] = {}
    out = {}
    for av in avset:
        rows = brute_force_av(db, av, env_rows)
        out[av.name] = rows
        env_rows[av.name] = [dict(zip(av.attributes, r)) for r in rows]
    return out


# ---------------------------------------------------------------------------
# Random schemas, views and databases (built as text, then parsed)
# ---------------------------------------------------------------------------


@dataclass
class RandomInstance:
    schema_text: str
    view_texts: list[str]
    catalog: Catalog
    views: list[ViewDef]
    db: Database

    @property
    def view(self) -> ViewDef:
        return self.views[0]


_TYPES = ("INTEGER", "TEXT(3)", "DECIMAL")


def _literal(domain: str, rng: random.Random):
    if domain == "INTEGER":
        v = rng.randrange(0, 5)
        return v, str(v)
    if domain == "DECIMAL":
        v = Decimal(rng.randrange(0, 8)) / 2
        return v, str(v)
    v = rng.choice("abc")
    return v, f"'{v}'"


def random_schema(rng: random.Random, max_relations: int = 5):
    """Relations R0..Rk-1; Ri may reference any Rj with j < i (so the FK
    graph is acyclic) and always references at least one when i > 0."""
    k = min(max_relations, rng.choice((1, 2, 3, 3, 4, 4, 5)))
    rels = []
    for i in range(k):
        values = [(f"v{j}", rng.choice(_TYPES)) for j in range(rng.randint(1, 3))]
        targets = [j for j in range(i) if rng.random() < 0.4]
        if i and not targets:
            targets = [rng.randrange(i)]
        rels.append((f"R{i}", values, targets))
    lines = []
    for name, values, targets in rels:
        cols = ["  id INTEGER"] + [f"  {a} {t}" for a, t in values]
        cols += [f"  r{j}_id INTEGER" for j in targets]
        cols.append("  PRIMARY KEY (id)")
        cols += [f"  FOREIGN KEY (r{j}_id) REFERENCES R{j}(id)" for j in targets]
        lines.append(f"CREATE TABLE {name} (\n" + ",\n".join(cols) + "\n);")
    return "\n\n".join(lines) + "\n", rels


def random_view(rng: random.Random, rels, name: str = "V") -> str:
    """A connected view over the induced FK subgraph of a random subset."""
    adj: dict[int, set[int]] = {i: set() for i in range(len(rels))}
    for i, (_, _, targets) in enumerate(rels):
        for j in targets:
            adj[i].add(j)
            adj[j].add(i)
    chosen = [rng.randrange(len(rels))]
    for _ in range(len(rels) - 1):
        frontier = sorted({n for c in chosen for n in adj[c]} - set(chosen))
        if not frontier or rng.random() < 0.15:
            break
        chosen.append(rng.choice(frontier))
    rng.shuffle(chosen)
    alias = {i: (f"x{i}" if rng.random() < 0.3 else f"R{i}") for i in chosen}
    conds = []
    for i in chosen:
        for j in rels[i][2]:
            if j in chosen:
                conds.append(f"{alias[i]}.r{j}_id = {alias[j]}.id")
    types_of = {}
    for i in chosen:
        types_of[i] = [("id", "INTEGER"), *rels[i][1]]
        for _ in range(rng.choice((0, 0, 1, 1, 2))):
            attr, dom = rng.choice(types_of[i])
            _, lit = _literal(dom, rng)
            op = rng.choice(tuple(OPS))
            conds.append(f"{alias[i]}.{attr} {op} {lit}")
    candidates = [(i, a) for i in chosen for a, _ in types_of[i]]
    candidates += [(i, f"r{j}_id") for i in chosen for j in rels[i][2]]
    output = rng.sample(candidates, rng.randint(1, min(4, len(candidates))))
    select = ", ".join(f"{alias[i]}.{a}" for i, a in output)
    frm = ", ".join(f"R{i}" if alias[i] == f"R{i}" else f"R{i} {alias[i]}" for i in chosen)
    text = f"CREATE VIEW {name} AS\nSELECT {select}\nFROM {frm}"
    if conds:
        text += "\nWHERE " + "\n  AND ".join(conds)
    return text + "\n"


def random_database(catalog: Catalog, rng: random.Random, max_rows: int = 12) -> Database:
    db = Database(catalog)
    batch: dict[str, list[tuple]] = {}
    keys: dict[str, list[int]] = {}
    for name in catalog.topological_order():
        schema = catalog.relations[name]
        n = rng.randint(0, max_rows)
        if any(not keys.get(fk.target) for fk in schema.foreign_keys):
            n = 0
        rows = []
        for k in range(1, n + 1):
            values = []
            for attr in schema.attributes:
                if attr.name == "id":
                    values.append(k)
                elif attr.name.endswith("_id"):
                    target = next(fk.target for fk in schema.foreign_keys if fk.attributes == (attr.name,))
                    values.append(rng.choice(keys[target]))
                else:
                    values.append(_literal(attr.sql_type.split("(")[0].upper(), rng)[0])
            rows.append(tuple(values))
        keys[name] = list(range(1, n + 1))
        if rows:
            batch[name] = rows
    insert_batch(db, batch)
    return db


def random_instance(rng: random.Random, *, views: int = 1, max_relations: int = 5, max_rows: int = 15) -> RandomInstance:
    schema_text, rels = random_schema(rng, max_relations)
    catalog = parse_schema(schema_text)
    view_texts = [random_view(rng, rels, f"V{i + 1}") for i in range(views)]
    parsed = [parse_view(t, catalog) for t in view_texts]
    db = random_database(catalog, rng, max_rows)
    return RandomInstance(schema_text, view_texts, catalog, parsed, db)


# ---------------------------------------------------------------------------
# Reachability
# ---------------------------------------------------------------------------


_OPAQUE = (types.ModuleType, type, types.FunctionType, types.BuiltinFunctionType, types.CodeType, types.FrameType)


def reachable_instances(root, kinds: tuple[type, ...]) -> list:
    """Objects of ``kinds`` reachable from ``root`` through data references.

    Modules, classes, functions and frames are not followed: they lead to
    global state rather than to what the object itself holds.
    """
    seen: set[int] = set()
    stack = [root]
    found = []
    while stack:
        obj = stack.pop()
        if id(obj) in seen or isinstance(obj, _OPAQUE):
            continue
        seen.add(id(obj))
        if isinstance(obj, kinds):
            found.append(obj)
        stack.extend(gc.get_referents(obj))
    return found


BASE_KINDS = (Database, Table)
