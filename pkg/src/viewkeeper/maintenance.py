"""Self-maintenance of materialized views under insertions.

A :class:`WarehouseState` holds the materialized views and the stored
auxiliary views and nothing else. Batches of inserted source tuples are
propagated using only that state and the batch itself.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from . import predicates as P
from .avderive import materialize_avset
from .catalog import Catalog, ViewDef, view_join_digraph
from .errors import IntegrityError, PlanError
from .gluing import AvStore, GluedAv, MergedAvSet, materialize_plan
from .relstore import (
    Database,
    RelationInstance,
    coerce_row,
    env_lookup,
    evaluate_view,
    join_view,
    select_project,
)

InsertionBatch = Mapping[str, Sequence[Sequence]]


@dataclass
class ViewDelta:
    """Tuples added to each materialized view by one batch."""

    added: dict[str, set] = field(default_factory=dict)

    def __bool__(self) -> bool:
        return any(self.added.values())

    def __getitem__(self, view: str) -> set:
        return self.added.get(view, set())

    def merge(self, other: "ViewDelta") -> None:
        for view, rows in other.added.items():
            self.added.setdefault(view, set()).update(rows)


class WarehouseState:
    """Materialized views plus stored auxiliary views. No base relations.

    ``stats`` counts, per view, how often an insertion was propagated through
    the view (``evaluated``) and how often the view was skipped outright
    because the inserted relation is referenced inside it (``skipped``).
    """

    def __init__(
        self,
        catalog: Catalog,
        views: Sequence[ViewDef],
        plan: MergedAvSet,
        mvs: Mapping[str, RelationInstance],
        store: AvStore,
    ):
        self.catalog = catalog
        self.views = {v.name: v for v in views}
        self.plan = plan
        self.mvs = dict(mvs)
        self.store = store
        self.stats: Counter = Counter()
        self._indegree = {
            v.name: dict(view_join_digraph(catalog, v).in_degree()) for v in views
        }

    @property
    def avs(self) -> dict[str, RelationInstance]:
        """Stored auxiliary-view extents keyed by unit name."""
        return self.store.extents

    def logical_av(self, view: str, relation: str):
        return self.plan.avset(view).avs.get(relation)


def init_state(db: Database, views: Sequence[ViewDef], plan: MergedAvSet) -> WarehouseState:
    """Materialize every view and stored auxiliary view once from ``db``."""
    names = [v.name for v in views]
    if sorted(names) != sorted(plan.views):
        raise PlanError(f"plan covers views {sorted(plan.views)}, not {sorted(names)}")
    for v in views:
        for rel, av in plan.avset(v.name).avs.items():
            if rel not in v.relations:
                raise PlanError(f"{av.name} is over {rel}, which {v.name} does not use")
    store = materialize_plan(db, plan)
    mvs = {v.name: evaluate_view(db, v) for v in views}
    return WarehouseState(db.catalog, views, plan, mvs, store)


def _rows(state: WarehouseState, relation: str, delta: Iterable[Sequence]) -> set[tuple]:
    schema = state.catalog.relations[relation]
    return {coerce_row(schema, values) for values in delta}


def av_delta(
    state: WarehouseState,
    relation: str,
    delta: Iterable[Sequence],
    store: AvStore | None = None,
) -> dict[str, set]:
    """Tuples each stored auxiliary view on ``relation`` gains from ``delta``.

    Memberships are evaluated against the current extents in ``store``
    (default: the committed store), so relations referenced by ``relation``
    must already have been brought up to date.
    """
    store = store if store is not None else state.store
    schema = state.catalog.relations[relation]
    rows = _rows(state, relation, delta)
    out: dict[str, set] = {}
    for unit in state.plan.units.get(relation, ()):
        try:
            fresh = select_project(
                rows, schema.names, unit.condition, unit.attributes, env_lookup(store)
            )
        except KeyError as exc:
            raise PlanError(f"{unit.name}: membership target missing ({exc})") from None
        out[unit.name] = fresh.rows - store[unit.name].rows
    return out


def mv_delta(
    state: WarehouseState,
    relation: str,
    delta: Iterable[Sequence],
    store: AvStore | None = None,
) -> ViewDelta:
    """New view tuples caused by inserting ``delta`` into ``relation``.

    Only views in which no relation references ``relation`` can change: any
    tuple joining a fresh ``relation`` tuple through an FK would itself have
    to be new. Those views are skipped without evaluation. For the others the
    filtered delta is joined with the view's own auxiliary views (glued ones
    reconstructed per view).
    """
    store = store if store is not None else state.store
    rows = _rows(state, relation, delta)
    schema = state.catalog.relations[relation]
    result = ViewDelta()
    for name, view in state.views.items():
        if relation not in view.relations:
            continue
        if state._indegree[name][relation] > 0:
            state.stats[name, "skipped"] += 1
            continue
        state.stats[name, "evaluated"] += 1
        pred = view.local(relation)
        test = P.compile_predicate(pred, schema.names)
        inputs = {relation: RelationInstance(schema.names, {r for r in rows if test(r)})}
        for other in view.relations:
            if other == relation:
                continue
            av = state.logical_av(name, other)
            if av is None:
                raise PlanError(f"view {name} has no auxiliary view for {other}")
            inputs[other] = store[av.name]
        fresh = join_view(view, inputs, start=relation)
        result.added[name] = fresh.rows - state.mvs[name].rows
    return result


def _check_order(catalog: Catalog, order: Sequence[str], relations: set[str]) -> list[str]:
    if set(order) != relations or len(order) != len(relations):
        raise ValueError(f"order {list(order)} must list exactly {sorted(relations)}")
    pos = {r: i for i, r in enumerate(order)}
    for rel in relations:
        for fk in catalog.relations[rel].foreign_keys:
            if fk.target in pos and pos[fk.target] > pos[rel]:
                raise ValueError(f"{fk.target} must be processed before {rel}")
    return list(order)


def apply_batch(
    state: WarehouseState,
    batch: InsertionBatch,
    *,
    order: Sequence[str] | None = None,
) -> ViewDelta:
    """Propagate one insertion batch into ``state``; all or nothing.

    Relations are processed referenced-first (or in ``order``, which must
    respect FK dependencies). For each relation the view deltas are computed
    first and then its auxiliary views are extended, so later relations join
    against up-to-date extents. Everything is staged on a copy and committed
    at the end; any error leaves ``state`` untouched.

    The engine checks what it can see: domains, arity, and key clashes within
    the batch or with stored auxiliary rows that carry the key. Referential
    integrity against the sources is the source's responsibility.
    """
    catalog = state.catalog
    rows_by_rel: dict[str, set[tuple]] = {}
    for name, values in batch.items():
        rel = catalog.find(name)
        if rel is None:
            raise IntegrityError(f"batch names unknown relation {name!r}")
        rows_by_rel.setdefault(rel.name, set()).update(_rows(state, rel.name, values))
    rows_by_rel = {r: rows for r, rows in rows_by_rel.items() if rows}
    if order is None:
        order = [r for r in catalog.topological_order() if r in rows_by_rel]
    else:
        order = _check_order(catalog, [catalog.relation(r).name for r in order], set(rows_by_rel))
    _check_keys(state, rows_by_rel)

    staged = state.store.copy()
    stats_before = state.stats.copy()
    total = ViewDelta()
    try:
        for rel in order:
            delta = rows_by_rel[rel]
            total.merge(mv_delta(state, rel, delta, staged))
            for unit, added in av_delta(state, rel, delta, staged).items():
                if added:
                    staged.add(unit, added)
    except Exception:
        state.stats = stats_before
        raise
    for view, added in total.added.items():
        state.mvs[view].rows.update(added)
    state.store = staged
    return total


def _check_keys(state: WarehouseState, rows_by_rel: Mapping[str, set[tuple]]) -> None:
    for rel, rows in rows_by_rel.items():
        schema = state.catalog.relations[rel]
        pk_idx = [schema.index(a) for a in schema.primary_key]
        keys = [tuple(r[i] for i in pk_idx) for r in rows]
        if len(set(keys)) != len(keys):
            raise IntegrityError(f"{rel}: duplicate primary key within batch")
        for unit in state.plan.units.get(rel, ()):
            if not set(schema.primary_key) <= set(unit.attributes):
                continue
            extent = state.store[unit.name]
            have = extent.keys(schema.primary_key)
            probe = [k[0] for k in keys] if len(pk_idx) == 1 else keys
            clash = next((k for k in probe if k in have), None)
            if clash is not None:
                raise IntegrityError(f"{rel}: primary key {clash} already present")


# ---------------------------------------------------------------------------
# Oracle harness (sees the base database; the engine never does)
# ---------------------------------------------------------------------------


def oracle_mismatches(state: WarehouseState, db: Database) -> list[str]:
    """Compare every view and auxiliary view in ``state`` with a recompute over ``db``."""
    problems = []
    for name, view in state.views.items():
        expect = evaluate_view(db, view)
        got = state.mvs[name]
        if got != expect:
            problems.append(
                f"view {name}: {len(got.rows - expect.rows)} extra, "
                f"{len(expect.rows - got.rows)} missing"
            )
    for avset in state.plan.avsets:
        env = materialize_avset(db, avset)
        for av in avset:
            if state.store[av.name] != env[av.name]:
                problems.append(f"auxiliary view {av.name} differs from its definition")
    fresh = materialize_plan(db, state.plan)
    for unit in state.plan.stored():
        if state.store.extents[unit.name] != fresh.extents[unit.name]:
            kind = "glued view" if isinstance(unit, GluedAv) else "stored view"
            problems.append(f"{kind} {unit.name} differs from its definition")
    return problems
