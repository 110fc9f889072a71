"""Pure-Python join/projection kernels. Reference semantics for the Cython build."""

from __future__ import annotations

from typing import Iterable, Sequence


def key_set(rows: Iterable[tuple], idx: Sequence[int]) -> set:
    """Distinct keys; single-column keys are bare values, wider ones tuples."""
    if len(idx) == 1:
        i = idx[0]
        return {row[i] for row in rows}
    return {tuple(row[i] for i in idx) for row in rows}


def project_distinct(rows: Iterable[tuple], idx: Sequence[int]) -> set:
    idx = tuple(idx)
    return {tuple(row[i] for i in idx) for row in rows}


def semijoin(rows: Iterable[tuple], idx: Sequence[int], keys: set) -> list:
    if len(idx) == 1:
        i = idx[0]
        return [row for row in rows if row[i] in keys]
    return [row for row in rows if tuple(row[i] for i in idx) in keys]


def hash_join(
    left: Sequence[tuple],
    left_idx: Sequence[int],
    right: Sequence[tuple],
    right_idx: Sequence[int],
) -> list:
    """Equijoin; each output row is ``left_row + right_row``."""
    table: dict = {}
    if len(right_idx) == 1:
        j = right_idx[0]
        for r in right:
            table.setdefault(r[j], []).append(r)
    else:
        for r in right:
            table.setdefault(tuple(r[j] for j in right_idx), []).append(r)
    out = []
    single = len(left_idx) == 1
    i0 = left_idx[0]
    for l in left:
        key = l[i0] if single else tuple(l[i] for i in left_idx)
        matches = table.get(key)
        if matches:
            for r in matches:
                out.append(l + r)
    return out


def filter_equal(rows: Iterable[tuple], pairs: Sequence[tuple[int, int]]) -> list:
    """Rows where ``row[a] == row[b]`` for every ``(a, b)`` in ``pairs``."""
    return [row for row in rows if all(row[a] == row[b] for a, b in pairs)]
