"""In-memory relations with set semantics, key and RI enforcement, SPJ evaluation."""

from __future__ import annotations

import csv
import os
from typing import Iterable, Mapping, Sequence

from . import kernels
from . import predicates as P
from .catalog import Catalog, RelationDef, ViewDef
from .errors import IntegrityError, ViewkeeperError


class RelationInstance:
    """A set of tuples laid out as ``columns``. Used for views and AV extents."""

    __slots__ = ("columns", "rows")

    def __init__(self, columns: Iterable[str], rows: Iterable[tuple] = ()):
        self.columns = tuple(columns)
        self.rows = rows if isinstance(rows, set) else set(rows)

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def __eq__(self, other):
        if not isinstance(other, RelationInstance):
            return NotImplemented
        return self.columns == other.columns and self.rows == other.rows

    def __repr__(self):
        return f"RelationInstance({self.columns}, {len(self.rows)} rows)"

    def index(self, name: str) -> int:
        return self.columns.index(name)

    def positions(self, names: Iterable[str]) -> list[int]:
        return [self.columns.index(n) for n in names]

    def project(self, names: Sequence[str]) -> "RelationInstance":
        return RelationInstance(names, kernels.project_distinct(self.rows, self.positions(names)))

    def keys(self, names: Sequence[str]) -> set:
        return kernels.key_set(self.rows, self.positions(names))

    def copy(self) -> "RelationInstance":
        return RelationInstance(self.columns, set(self.rows))

    def sorted_rows(self) -> list[tuple]:
        return sorted(self.rows, key=_sort_key)


def _sort_key(row: tuple):
    return tuple((type(v).__name__ == "str", v) for v in row)


class Table:
    """A base relation instance: rows keyed by primary key."""

    __slots__ = ("schema", "rows", "_pk")

    def __init__(self, schema: RelationDef):
        self.schema = schema
        self.rows: dict[tuple, tuple] = {}
        self._pk = [schema.index(a) for a in schema.primary_key]

    def __len__(self) -> int:
        return len(self.rows)

    def key(self, row: tuple) -> tuple:
        return tuple(row[i] for i in self._pk)

    def instance(self) -> RelationInstance:
        return RelationInstance(self.schema.names, set(self.rows.values()))

    def copy(self) -> "Table":
        t = Table(self.schema)
        t.rows = dict(self.rows)
        return t


class Database:
    """Base relations of a catalog. Global RI holds between batches."""

    def __init__(self, catalog: Catalog):
        self.catalog = catalog
        self.tables = {name: Table(rel) for name, rel in catalog.relations.items()}

    def __getitem__(self, name: str) -> Table:
        return self.tables[self.catalog.relation(name).name]

    def counts(self) -> dict[str, int]:
        return {name: len(t) for name, t in self.tables.items()}

    def copy(self) -> "Database":
        db = Database(self.catalog)
        db.tables = {name: t.copy() for name, t in self.tables.items()}
        return db

    def insert_batch(self, batch: Mapping[str, Iterable[Sequence]]) -> None:
        insert_batch(self, batch)

    def integrity_violations(self) -> list[str]:
        """Full scan of key and FK constraints; empty when the database is valid."""
        problems = []
        for name, table in self.tables.items():
            for key, row in table.rows.items():
                if table.key(row) != key:
                    problems.append(f"{name}: row {row} filed under key {key}")
                for fk in table.schema.foreign_keys:
                    ref = _fk_value(table.schema, fk, row, self.catalog)
                    if ref not in self.tables[fk.target].rows:
                        problems.append(f"{name}: {row} references missing {fk.target}{ref}")
        return problems


def _fk_value(schema: RelationDef, fk, row: tuple, catalog: Catalog) -> tuple:
    """FK columns of ``row`` arranged in the target's primary-key order."""
    target = catalog.relations[fk.target]
    paired = dict(zip(fk.target_attributes, fk.attributes))
    return tuple(row[schema.index(paired[p])] for p in target.primary_key)


def coerce_row(schema: RelationDef, values: Sequence) -> tuple:
    if len(values) != len(schema.attributes):
        raise IntegrityError(
            f"{schema.name}: expected {len(schema.attributes)} values, got {len(values)}"
        )
    return tuple(a.coerce(v) for a, v in zip(schema.attributes, values))


def insert_batch(db: Database, batch: Mapping[str, Iterable[Sequence]]) -> None:
    """Insert all tuples of ``batch`` or none of them.

    Tuples are staged relation by relation in topological FK order (referenced
    relations first), so a batch may insert a parent and a child referencing
    it. Duplicate keys, dangling FKs and domain errors abort the whole batch.
    """
    catalog = db.catalog
    wanted: dict[str, list] = {}
    for name, rows in batch.items():
        rel = catalog.find(name)
        if rel is None:
            raise IntegrityError(f"batch names unknown relation {name!r}")
        wanted.setdefault(rel.name, []).extend(rows)

    staged: dict[str, dict[tuple, tuple]] = {}
    for name in catalog.topological_order():
        if name not in wanted:
            continue
        table = db.tables[name]
        fresh: dict[tuple, tuple] = {}
        for values in wanted[name]:
            row = coerce_row(table.schema, values)
            key = table.key(row)
            if key in table.rows or key in fresh:
                raise IntegrityError(f"{name}: duplicate primary key {key}")
            fresh[key] = row
        staged[name] = fresh

    for name, fresh in staged.items():
        schema = db.tables[name].schema
        for fk in schema.foreign_keys:
            existing = db.tables[fk.target].rows
            pending = staged.get(fk.target, {})
            for row in fresh.values():
                ref = _fk_value(schema, fk, row, catalog)
                if ref not in existing and ref not in pending:
                    raise IntegrityError(
                        f"{name}: dangling foreign key {fk.attributes}={ref} into {fk.target}"
                    )

    for name, fresh in staged.items():
        db.tables[name].rows.update(fresh)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def env_lookup(env: Mapping[str, RelationInstance]) -> P.KeyLookup:
    """Membership key sets drawn from materialized extents, memoised per call site."""
    cache: dict = {}

    def lookup(name: str, attrs: tuple[str, ...]) -> set:
        if (name, attrs) not in cache:
            if name not in env:
                raise ViewkeeperError(f"membership refers to unmaterialized view {name!r}")
            cache[name, attrs] = env[name].keys(attrs)
        return cache[name, attrs]

    return lookup


def select_project(
    rows: Iterable[tuple],
    columns: Sequence[str],
    condition: P.Predicate | None,
    out: Sequence[str],
    lookup: P.KeyLookup | None = None,
) -> RelationInstance:
    """``π_out σ_condition`` over ``rows`` laid out as ``columns``."""
    test = P.compile_predicate(condition, columns, lookup)
    kept = rows if condition is None else [r for r in rows if test(r)]
    idx = [list(columns).index(c) for c in out]
    return RelationInstance(out, kernels.project_distinct(kept, idx))


def join_view(
    view: ViewDef,
    inputs: Mapping[str, RelationInstance],
    start: str | None = None,
) -> RelationInstance:
    """Join per-relation inputs along the view's FK edges and project.

    Each input must already satisfy its relation's local predicate and carry
    every join and output attribute of that relation. Relations are bound
    one at a time, smallest connected input first; the first edge into a new
    relation is a hash join and any further edges are equality filters.
    """
    columns = view.output_columns
    if start is None:
        start = min(view.relations, key=lambda r: (len(inputs[r]), r))
    offsets = {start: 0}
    width = len(inputs[start].columns)
    rows: list = list(inputs[start].rows)
    while len(offsets) < len(view.relations):
        if not rows:
            return RelationInstance(columns)
        frontier = {
            (e.parent if e.child in offsets else e.child)
            for e in view.joins
            if (e.child in offsets) != (e.parent in offsets)
        }
        nxt = min(frontier, key=lambda r: (len(inputs[r]), r))
        inst = inputs[nxt]
        edges = [
            e for e in view.joins
            if nxt in (e.child, e.parent) and (e.parent if e.child == nxt else e.child) in offsets
        ]
        first, rest = edges[0], edges[1:]
        other = first.parent if first.child == nxt else first.child
        lidx = [offsets[other] + inputs[other].index(a) for a in first.side(other)]
        ridx = inst.positions(first.side(nxt))
        rows = kernels.hash_join(rows, lidx, list(inst.rows), ridx)
        offsets[nxt] = width
        width += len(inst.columns)
        pairs = []
        for e in rest:
            other = e.parent if e.child == nxt else e.child
            for a, b in zip(e.side(other), e.side(nxt)):
                pairs.append((offsets[other] + inputs[other].index(a), offsets[nxt] + inst.index(b)))
        if pairs:
            rows = kernels.filter_equal(rows, pairs)
    idx = [offsets[r] + inputs[r].index(a) for r, a in view.output]
    return RelationInstance(columns, kernels.project_distinct(rows, idx))


def local_input(db: Database, view: ViewDef, relation: str) -> RelationInstance:
    """Base rows of ``relation`` passing the view's local predicate."""
    table = db.tables[relation]
    cols = table.schema.names
    pred = view.local(relation)
    rows = table.rows.values()
    if pred is not None:
        test = P.compile_predicate(pred, cols)
        rows = [r for r in rows if test(r)]
    return RelationInstance(cols, set(rows))


def evaluate_view(db: Database, view: ViewDef) -> RelationInstance:
    """Recompute ``view`` from the base relations (the full-recompute oracle)."""
    inputs = {r: local_input(db, view, r) for r in view.relations}
    return join_view(view, inputs)


def eval_av(db: Database, av, env: Mapping[str, RelationInstance]) -> RelationInstance:
    """Materialize an auxiliary view (or glued view) over ``db``.

    ``env`` supplies extents for the views named by membership conditions.
    """
    table = db.tables[av.source_relation]
    return select_project(
        table.rows.values(), table.schema.names, av.condition, av.attributes, env_lookup(env)
    )


# ---------------------------------------------------------------------------
# CSV storage
# ---------------------------------------------------------------------------


def format_value(value: object) -> str:
    return value if isinstance(value, str) else str(value)


def dump_csv(db: Database, directory: str | os.PathLike) -> None:
    """One ``<relation>.csv`` per relation, header row, rows sorted by key."""
    os.makedirs(directory, exist_ok=True)
    for name, table in db.tables.items():
        with open(os.path.join(directory, f"{name}.csv"), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(table.schema.names)
            for key in sorted(table.rows):
                w.writerow([format_value(v) for v in table.rows[key]])


def read_csv_rows(path: str | os.PathLike, schema: RelationDef) -> list[tuple]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.lower() for h in header] != [n.lower() for n in schema.names]:
            raise IntegrityError(f"{path}: header must be {','.join(schema.names)}")
        rows = []
        for lineno, record in enumerate(reader, start=2):
            if len(record) != len(schema.attributes):
                raise IntegrityError(f"{path}:{lineno}: expected {len(schema.attributes)} fields")
            try:
                rows.append(tuple(a.parse(v) for a, v in zip(schema.attributes, record)))
            except IntegrityError as exc:
                raise IntegrityError(f"{path}:{lineno}: {exc}") from None
        return rows


def load_csv(catalog: Catalog, directory: str | os.PathLike) -> Database:
    db = Database(catalog)
    batch = {}
    for name, rel in catalog.relations.items():
        path = os.path.join(directory, f"{name}.csv")
        if not os.path.exists(path):
            raise IntegrityError(f"missing data file {path}")
        batch[name] = read_csv_rows(path, rel)
    insert_batch(db, batch)
    return db
