"""Gluing auxiliary views of different views and the byte-cost merge rule.

Two auxiliary views over the same relation, ``π_A σ_C1`` and ``π_B σ_C2``,
glue into ``π_{A∪B∪D} σ_{C1∨C2}`` where ``D`` holds the attributes the two
conditions mention, so either parent can be recovered by re-applying its own
condition and projection. The merge keeps the glued view only when it is no
larger, in bytes, than storing both parents.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

from . import predicates as P
from .avderive import AvDef, AvSet, materialize_avset
from .catalog import Catalog
from .errors import PlanError, ViewkeeperError
from .relstore import Database, RelationInstance, env_lookup, eval_av, select_project


@dataclass(frozen=True)
class GluedAv:
    name: str
    source_relation: str
    attributes: tuple[str, ...]
    parents: tuple[AvDef, ...]

    @property
    def condition(self) -> P.Predicate | None:
        return P.disjoin(p.condition for p in self.parents)

    def parent(self, which: int) -> AvDef:
        """1-based, matching the order the parents were glued in."""
        if not 1 <= which <= len(self.parents):
            raise IndexError(f"{self.name} has {len(self.parents)} parents, not {which}")
        return self.parents[which - 1]

    def sql(self) -> str:
        text = f"CREATE VIEW {self.name} AS\nSELECT {', '.join(self.attributes)}\nFROM {self.source_relation}"
        if self.condition is not None:
            text += f"\nWHERE {P.render(self.condition)}"
        return text + ";"

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "source_relation": self.source_relation,
            "attributes": list(self.attributes),
            "parents": [p.to_json() for p in self.parents],
        }

    @classmethod
    def from_json(cls, data: dict) -> "GluedAv":
        return cls(
            data["name"],
            data["source_relation"],
            tuple(data["attributes"]),
            tuple(AvDef.from_json(p) for p in data["parents"]),
        )


Unit = Union[AvDef, GluedAv]


def _parents(av: Unit) -> tuple[AvDef, ...]:
    return av.parents if isinstance(av, GluedAv) else (av,)


def glue_defs(
    av1: Unit, av2: Unit, *, name: str | None = None, catalog: Catalog | None = None
) -> GluedAv:
    """Glue two views over one relation. Already-glued inputs are flattened."""
    if av1.source_relation != av2.source_relation:
        raise PlanError(
            f"cannot glue {av1.name} over {av1.source_relation} with "
            f"{av2.name} over {av2.source_relation}"
        )
    parents = _parents(av1) + _parents(av2)
    wanted: list[str] = []
    for p in parents:
        wanted.extend(a for a in p.attributes if a not in wanted)
    for p in parents:
        wanted.extend(a for a in sorted(P.attributes(p.condition)) if a not in wanted)
    if catalog is not None:
        wanted = list(catalog.relations[av1.source_relation].ordered(wanted))
    return GluedAv(name or f"{av1.name}+{av2.name}", av1.source_relation, tuple(wanted), parents)


@dataclass(frozen=True)
class GlueDecision:
    relation: str
    n1: int
    n2: int
    b1: int
    b2: int
    shared: int
    glued_count: int
    glued_cost: int
    separate_cost: int
    chose_glue: bool

    TSV_HEADER = "relation\tn1\tn2\tb1\tb2\tB\tC\tglued_cost\tseparate_cost\tchose_glue"

    def tsv(self) -> str:
        return "\t".join(
            str(v)
            for v in (
                self.relation,
                self.n1,
                self.n2,
                self.b1,
                self.b2,
                self.shared,
                self.glued_count,
                self.glued_cost,
                self.separate_cost,
                str(self.chose_glue).lower(),
            )
        )

    def to_json(self) -> dict:
        return dict(self.__dict__)


def glue_cost(
    n1: int, n2: int, b1: int, b2: int, shared: int, glued_count: int, relation: str = ""
) -> GlueDecision:
    """Glue when ``C·(b1 + b2 − B) ≤ n1·b1 + n2·b2``; ties glue."""
    if min(n1, n2, b1, b2, shared, glued_count) < 0:
        raise ValueError("counts and widths must be non-negative")
    if shared > min(b1, b2):
        raise ValueError(f"shared width {shared} exceeds a parent width ({b1}, {b2})")
    glued = glued_count * (b1 + b2 - shared)
    separate = n1 * b1 + n2 * b2
    return GlueDecision(relation, n1, n2, b1, b2, shared, glued_count, glued, separate, glued <= separate)


def tuple_width(catalog: Catalog, av: Unit) -> int:
    return catalog.relations[av.source_relation].width(av.attributes)


def shared_width(catalog: Catalog, av1: Unit, av2: Unit) -> int:
    common = set(av1.attributes) & set(av2.attributes)
    return catalog.relations[av1.source_relation].width(common)


# ---------------------------------------------------------------------------
# Plans
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MergedAvSet:
    """Stored auxiliary views for a group of views.

    ``units`` maps each relation to what is physically kept for it: a single
    glued view, or the separate per-view definitions. ``avsets`` keeps the
    per-view logical definitions each view is maintained from.
    """

    avsets: tuple[AvSet, ...]
    units: Mapping[str, tuple[Unit, ...]]
    decisions: tuple[GlueDecision, ...] = ()

    @property
    def views(self) -> list[str]:
        return [s.view for s in self.avsets]

    def avset(self, view: str) -> AvSet:
        for s in self.avsets:
            if s.view == view:
                return s
        raise KeyError(view)

    def stored(self) -> list[Unit]:
        """Every stored unit, referenced relations first."""
        return [u for units in self.units.values() for u in units]

    def glued(self) -> list[GluedAv]:
        return [u for u in self.stored() if isinstance(u, GluedAv)]

    def entry(self, relation: str) -> Unit | tuple[AvDef, ...]:
        units = self.units[relation]
        if len(units) == 1 and isinstance(units[0], GluedAv):
            return units[0]
        return units

    def unit_of(self, av_name: str) -> Unit:
        for unit in self.stored():
            if unit.name == av_name or any(p.name == av_name for p in _parents(unit)):
                return unit
        raise KeyError(av_name)

    def to_json(self) -> dict:
        return {
            "avsets": [
                {
                    "view": s.view,
                    "avs": [a.to_json() for a in s],
                    "pruned": list(s.pruned),
                    "ri_pruning": s.ri_pruning,
                }
                for s in self.avsets
            ],
            # a list, not an object: the order is the dependency order
            "units": [
                [
                    rel,
                    [
                        {"glued": u.to_json()} if isinstance(u, GluedAv) else {"av": u.to_json()}
                        for u in units
                    ],
                ]
                for rel, units in self.units.items()
            ],
            "decisions": [d.to_json() for d in self.decisions],
        }

    @classmethod
    def from_json(cls, data: dict) -> "MergedAvSet":
        avsets = []
        for s in data["avsets"]:
            avs = [AvDef.from_json(a) for a in s["avs"]]
            avsets.append(
                AvSet(
                    s["view"],
                    {a.source_relation: a for a in avs},
                    tuple(s["pruned"]),
                    s.get("ri_pruning", True),
                )
            )
        units = {
            rel: tuple(
                GluedAv.from_json(u["glued"]) if "glued" in u else AvDef.from_json(u["av"])
                for u in us
            )
            for rel, us in data["units"]
        }
        decisions = tuple(GlueDecision(**d) for d in data["decisions"])
        return cls(tuple(avsets), units, decisions)


def separate_plan(catalog: Catalog, avsets: Sequence[AvSet]) -> MergedAvSet:
    """Every per-view auxiliary view stored on its own."""
    units: dict[str, list[Unit]] = {}
    for s in avsets:
        for av in s:
            units.setdefault(av.source_relation, []).append(av)
    order = catalog.topological_order()
    return MergedAvSet(
        tuple(avsets), {r: tuple(units[r]) for r in order if r in units}, ()
    )


class AvStore(Mapping):
    """Materialized units plus on-demand reconstruction of glued parents.

    Indexing by any logical AV name returns that AV's extent: stored units
    directly, glued parents by re-applying their condition and projection to
    the glued extent.
    """

    def __init__(self, plan: MergedAvSet, extents: Mapping[str, RelationInstance]):
        self.plan = plan
        self.extents = dict(extents)
        self._where: dict[str, GluedAv] = {}
        for unit in plan.stored():
            if isinstance(unit, GluedAv):
                for p in unit.parents:
                    self._where[p.name] = unit
        self._cache: dict[str, RelationInstance] = {}

    def __getitem__(self, name: str) -> RelationInstance:
        if name in self.extents:
            return self.extents[name]
        if name in self._cache:
            return self._cache[name]
        glued = self._where.get(name)
        if glued is None:
            raise KeyError(name)
        which = next(i for i, p in enumerate(glued.parents, start=1) if p.name == name)
        inst = reconstruct_av(glued, which, self)
        self._cache[name] = inst
        return inst

    def __iter__(self):
        yield from self.extents
        yield from self._where

    def __len__(self) -> int:
        return len(self.extents) + len(self._where)

    def __contains__(self, name) -> bool:
        return name in self.extents or name in self._where

    def add(self, unit: str, rows: Iterable[tuple]) -> None:
        self.extents[unit].rows.update(rows)
        self._cache.clear()

    def copy(self) -> "AvStore":
        return AvStore(self.plan, {k: v.copy() for k, v in self.extents.items()})


def reconstruct_av(glued: GluedAv, which: int, store: Mapping[str, RelationInstance]) -> RelationInstance:
    """``π_{A_which} σ_{C_which}`` over the stored glued extent."""
    parent = glued.parent(which)
    extent = store[glued.name]
    return select_project(
        extent.rows, extent.columns, parent.condition, parent.attributes, env_lookup(store)
    )


def materialize_plan(db: Database, plan: MergedAvSet) -> AvStore:
    """Evaluate every stored unit over ``db``; the store keeps no link to ``db``."""
    store = AvStore(plan, {})
    for unit in plan.stored():
        store.extents[unit.name] = eval_av(db, unit, store)
        store._cache.clear()
    return store


def _as_plan(catalog: Catalog, a: AvSet | MergedAvSet) -> MergedAvSet:
    return a if isinstance(a, MergedAvSet) else separate_plan(catalog, [a])


def merge_av_sets(
    db: Database,
    a1: AvSet | MergedAvSet,
    a2: AvSet,
    *,
    policy: str = "cost",
    names: Mapping[str, str] | None = None,
) -> MergedAvSet:
    """Glue the auxiliary views of two views relation by relation.

    For each relation present in both inputs the glued candidate is
    materialized over ``db`` to measure its size; it replaces the pair when
    the byte-cost rule allows (``policy="cost"``), always (``"always"``) or
    never (``"never"``). ``a1`` may itself be a merged plan, in which case the
    new view's AV is glued into that relation's first stored unit.
    """
    if policy not in ("cost", "always", "never"):
        raise ValueError(f"unknown glue policy {policy!r}")
    catalog = db.catalog
    names = dict(names or {})
    base = _as_plan(catalog, a1)
    if a2.view in base.views:
        raise PlanError(f"view {a2.view} is already part of the plan")
    env: dict[str, RelationInstance] = {}
    store = materialize_plan(db, base)
    for s in base.avsets:
        for av in s:
            env[av.name] = store[av.name]
    for unit in base.stored():
        env[unit.name] = store[unit.name]
    env.update(materialize_avset(db, a2))

    units: dict[str, tuple[Unit, ...]] = {}
    decisions = list(base.decisions)
    for rel in sorted(set(base.units) | set(a2.avs)):
        mine = base.units.get(rel, ())
        theirs = a2.avs.get(rel)
        if theirs is None:
            units[rel] = mine
            continue
        if not mine:
            units[rel] = (theirs,)
            continue
        first = mine[0]
        candidate = glue_defs(first, theirs, name=names.get(rel), catalog=catalog)
        decision = glue_cost(
            len(env[first.name]),
            len(env[theirs.name]),
            tuple_width(catalog, first),
            tuple_width(catalog, theirs),
            shared_width(catalog, first, theirs),
            len(eval_av(db, candidate, env)),
            rel,
        )
        decisions.append(decision)
        glue = {"cost": decision.chose_glue, "always": True, "never": False}[policy]
        units[rel] = (candidate, *mine[1:]) if glue else (*mine, theirs)
    order = catalog.topological_order()
    return MergedAvSet(
        base.avsets + (a2,),
        {r: units[r] for r in order if r in units},
        tuple(decisions),
    )


def fold_av_sets(
    db: Database, avsets: Sequence[AvSet], *, policy: str = "cost"
) -> MergedAvSet:
    """Merge any number of AV sets pairwise, in the given order."""
    if not avsets:
        raise ViewkeeperError("nothing to merge")
    plan: AvSet | MergedAvSet = avsets[0]
    for nxt in avsets[1:]:
        plan = merge_av_sets(db, plan, nxt, policy=policy)
    return _as_plan(db.catalog, plan)


def plan_bytes(catalog: Catalog, plan: MergedAvSet, store: Mapping[str, RelationInstance]) -> int:
    """Bytes the plan stores, using the widths the merge rule charges.

    A glued unit is charged ``C·(b1 + b2 − B)`` over its first two parents;
    separate units ``n·b``.
    """
    total = 0
    for unit in plan.stored():
        n = len(store[unit.name])
        if isinstance(unit, GluedAv):
            p1, p2 = unit.parents[0], unit.parents[1]
            width = tuple_width(catalog, p1) + tuple_width(catalog, p2) - shared_width(catalog, p1, p2)
            total += n * width
        else:
            total += n * tuple_width(catalog, unit)
    return total
