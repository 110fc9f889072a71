"""Batch files, delta records and on-disk warehouse state.

Batch file: one record per line, ``relation,v1,v2,...`` in schema order;
a blank line ends a batch. Delta output uses the same record shape with
the view name in front.
"""

from __future__ import annotations

import csv
import io
import json
import os
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .catalog import Catalog, ViewDef
from .errors import IntegrityError, ViewkeeperError
from .gluing import AvStore, MergedAvSet
from .maintenance import ViewDelta, WarehouseState
from .relstore import RelationInstance, format_value
from .sqlparse import parse_schema, parse_view


def parse_batches(text: str, catalog: Catalog, source: str = "<batch>") -> list[dict[str, list[tuple]]]:
    batches: list[dict[str, list[tuple]]] = []
    current: dict[str, list[tuple]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            if current:
                batches.append(current)
                current = {}
            continue
        record = next(csv.reader([line]))
        rel = catalog.find(record[0].strip())
        if rel is None:
            raise IntegrityError(f"{source}:{lineno}: unknown relation {record[0]!r}")
        values = record[1:]
        if len(values) != len(rel.attributes):
            raise IntegrityError(
                f"{source}:{lineno}: {rel.name} takes {len(rel.attributes)} values, got {len(values)}"
            )
        try:
            row = tuple(a.parse(v) for a, v in zip(rel.attributes, values))
        except IntegrityError as exc:
            raise IntegrityError(f"{source}:{lineno}: {exc}") from None
        current.setdefault(rel.name, []).append(row)
    if current:
        batches.append(current)
    return batches


def _records(prefix_rows: Iterable[tuple[str, Sequence]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for prefix, row in prefix_rows:
        w.writerow([prefix, *(format_value(v) for v in row)])
    return buf.getvalue()


def format_batches(batches: Sequence[Mapping[str, Sequence[tuple]]], catalog: Catalog) -> str:
    chunks = []
    for batch in batches:
        order = [r for r in catalog.topological_order() if r in batch]
        chunks.append(_records((rel, row) for rel in order for row in batch[rel]))
    return "\n".join(chunks)


def format_delta(delta: ViewDelta) -> str:
    return _records(
        (view, row)
        for view in sorted(delta.added)
        for row in RelationInstance((), delta.added[view]).sorted_rows()
    )


# ---------------------------------------------------------------------------
# Warehouse state on disk
# ---------------------------------------------------------------------------


def _write_extent(path: Path, inst: RelationInstance) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(inst.columns)
        for row in inst.sorted_rows():
            w.writerow([format_value(v) for v in row])


def _read_extent(path: Path, parsers) -> RelationInstance:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        columns = tuple(next(reader))
        rows = {tuple(p(v) for p, v in zip(parsers(columns), rec)) for rec in reader}
    return RelationInstance(columns, rows)


def save_state(
    state: WarehouseState, directory: str | os.PathLike, schema_text: str, view_texts: Sequence[str]
) -> None:
    d = Path(directory)
    (d / "mv").mkdir(parents=True, exist_ok=True)
    (d / "av").mkdir(parents=True, exist_ok=True)
    meta = {"schema": schema_text, "views": list(view_texts), "plan": state.plan.to_json()}
    (d / "state.json").write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    for name, inst in state.mvs.items():
        _write_extent(d / "mv" / f"{name}.csv", inst)
    for name, inst in state.avs.items():
        _write_extent(d / "av" / f"{name}.csv", inst)


def load_state(directory: str | os.PathLike) -> tuple[WarehouseState, str, list[str]]:
    d = Path(directory)
    try:
        meta = json.loads((d / "state.json").read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ViewkeeperError(f"{d} holds no warehouse state (run `glue --state`)") from None
    catalog = parse_schema(meta["schema"], "state.json:schema")
    views = [parse_view(t, catalog, "state.json:view") for t in meta["views"]]
    plan = MergedAvSet.from_json(meta["plan"])

    def mv_parsers(columns):
        out = []
        for col in columns:
            rel, attr = col.split(".", 1)
            out.append(catalog.relations[rel].attribute(attr).parse)
        return out

    mvs = {v.name: _read_extent(d / "mv" / f"{v.name}.csv", mv_parsers) for v in views}
    extents = {}
    for unit in plan.stored():
        schema = catalog.relations[unit.source_relation]
        extents[unit.name] = _read_extent(
            d / "av" / f"{unit.name}.csv",
            lambda cols, s=schema: [s.attribute(c).parse for c in cols],
        )
    state = WarehouseState(catalog, views, plan, mvs, AvStore(plan, extents))
    return state, meta["schema"], meta["views"]
