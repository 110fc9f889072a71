"""Auxiliary views that make one SPJ view self-maintainable under insertions.

Each relation that some other view relation references gets an auxiliary
view holding the tuples that pass the relation's local condition, reduced
by semijoins with the auxiliary views of the relations it references. A
relation that is the sole unreferenced root of the view's FK digraph gets
none: its existing tuples can never join tuples inserted elsewhere, because
their FK values point at tuples that already existed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import networkx as nx

from . import predicates as P
from .catalog import Catalog, ViewDef, view_join_digraph, view_order
from .errors import ViewError
from .relstore import Database, RelationInstance, eval_av, local_input


@dataclass(frozen=True)
class AvDef:
    name: str
    source_relation: str
    retained: tuple[str, ...]
    local_predicate: P.Predicate | None = None
    memberships: tuple[P.Membership, ...] = ()

    @property
    def attributes(self) -> tuple[str, ...]:
        return self.retained

    @property
    def condition(self) -> P.Predicate | None:
        return P.conjoin([self.local_predicate, *self.memberships])

    def sql(self) -> str:
        text = f"CREATE VIEW {self.name} AS\nSELECT {', '.join(self.retained)}\nFROM {self.source_relation}"
        if self.condition is not None:
            text += f"\nWHERE {P.render(self.condition)}"
        return text + ";"

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "source_relation": self.source_relation,
            "retained": list(self.retained),
            "local_predicate": P.to_json(self.local_predicate),
            "memberships": [P.to_json(m) for m in self.memberships],
        }

    @classmethod
    def from_json(cls, data: dict) -> "AvDef":
        return cls(
            data["name"],
            data["source_relation"],
            tuple(data["retained"]),
            P.from_json(data["local_predicate"]),
            tuple(P.from_json(m) for m in data["memberships"]),
        )


@dataclass(frozen=True)
class AvSet:
    """The auxiliary views of one view, keyed by source relation."""

    view: str
    avs: Mapping[str, AvDef]
    pruned: tuple[str, ...] = ()
    ri_pruning: bool = True

    def __iter__(self):
        return iter(self.avs.values())

    def __len__(self) -> int:
        return len(self.avs)

    def names(self) -> list[str]:
        return [av.name for av in self.avs.values()]

    def by_name(self, name: str) -> AvDef:
        for av in self.avs.values():
            if av.name == name:
                return av
        raise KeyError(name)


def _check_member(view: ViewDef, relation: str) -> None:
    if relation not in view.relations:
        raise ViewError(f"{relation!r} is not a relation of view {view.name}")


def needs_av(catalog: Catalog, view: ViewDef, relation: str) -> bool:
    """True unless ``relation`` is the unique unreferenced relation of the view.

    With a single root every other relation is reachable from it along FK
    edges, so old root tuples only ever join old tuples. When two or more
    relations are unreferenced an insertion into one of them can join old
    tuples of another, so every relation keeps an auxiliary view.
    """
    _check_member(view, relation)
    g = view_join_digraph(catalog, view)
    if g.in_degree(relation) > 0:
        return True
    roots = [r for r in view.relations if g.in_degree(r) == 0]
    return len(roots) > 1


def retained_attrs(catalog: Catalog, view: ViewDef, relation: str) -> tuple[str, ...]:
    """Output attributes of ``relation`` plus its attributes used in view joins."""
    _check_member(view, relation)
    wanted = set(view.output_of(relation))
    for edge in view.edges_of(relation):
        wanted.update(edge.side(relation))
    return catalog.relations[relation].ordered(wanted)


def default_av_name(view: ViewDef, relation: str) -> str:
    return f"aux_{relation}_{view.name}"


def derive_av_set(
    catalog: Catalog,
    view: ViewDef,
    *,
    ri_pruning: bool = True,
    names: Mapping[str, str] | None = None,
) -> AvSet:
    """Derive the auxiliary views for ``view``.

    With ``ri_pruning`` off every relation keeps an auxiliary view restricted
    only by its local condition, i.e. no key/RI knowledge is used.
    """
    names = dict(names or {})
    g = view_join_digraph(catalog, view)
    avs: dict[str, AvDef] = {}
    pruned = []
    for rel in view_order(catalog, view):
        if ri_pruning and not needs_av(catalog, view, rel):
            pruned.append(rel)
            continue
        members = []
        if ri_pruning:
            for edge in view.joins:
                if edge.child != rel:
                    continue
                reach = nx.descendants(g, edge.parent) | {edge.parent}
                if any(view.local(r) is not None for r in reach):
                    members.append(
                        P.Membership(
                            edge.fk.attributes, avs[edge.parent].name, edge.fk.target_attributes
                        )
                    )
        avs[rel] = AvDef(
            names.get(rel, default_av_name(view, rel)),
            rel,
            retained_attrs(catalog, view, rel),
            view.local(rel),
            tuple(members),
        )
    return AvSet(view.name, avs, tuple(pruned), ri_pruning)


def materialize_avset(db: Database, avset: AvSet) -> dict[str, RelationInstance]:
    """Extents of every AV in the set; memberships resolve to earlier entries."""
    env: dict[str, RelationInstance] = {}
    for av in avset:
        env[av.name] = eval_av(db, av, env)
    return env


# ---------------------------------------------------------------------------
# Count reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CountRow:
    relation: str
    base: int
    pass_local: int
    av: int


@dataclass(frozen=True)
class CountReport:
    view: str
    rows: tuple[CountRow, ...] = field(default_factory=tuple)

    @property
    def total(self) -> CountRow:
        return CountRow(
            "TOTAL",
            sum(r.base for r in self.rows),
            sum(r.pass_local for r in self.rows),
            sum(r.av for r in self.rows),
        )

    def row(self, relation: str) -> CountRow:
        for r in self.rows:
            if r.relation == relation:
                return r
        raise KeyError(relation)

    def to_tsv(self) -> str:
        lines = ["relation\tbase\tpass_local\tav"]
        for r in (*self.rows, self.total):
            lines.append(f"{r.relation}\t{r.base}\t{r.pass_local}\t{r.av}")
        return "\n".join(lines) + "\n"


def tuple_count_report(db: Database, view: ViewDef, avset: AvSet) -> CountReport:
    """Base size, rows passing local conditions, and AV size per view relation."""
    env = materialize_avset(db, avset)
    rows = []
    for rel in view.relations:
        av = avset.avs.get(rel)
        rows.append(
            CountRow(
                rel,
                len(db.tables[rel]),
                len(local_input(db, view, rel)),
                len(env[av.name]) if av is not None else 0,
            )
        )
    return CountReport(view.name, tuple(rows))
