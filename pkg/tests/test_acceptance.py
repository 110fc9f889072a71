"""Acceptance criteria, one test each.

Each test appends a PASS/FAIL line that the conftest prints in the terminal
summary; run ``pytest tests/test_acceptance.py -v`` to see just these.
"""

import random
import time

import pytest
from conftest import ACCEPTANCE_LINES, GOLDEN
from helpers import (
    BASE_KINDS,
    brute_force_av,
    brute_force_avset,
    brute_force_view,
    random_instance,
    reachable_instances,
)

from viewkeeper import (
    apply_batch,
    derive_av_set,
    evaluate_view,
    fold_av_sets,
    glue_cost,
    init_state,
    insert_batch,
    merge_av_sets,
    reconstruct_av,
    tuple_count_report,
)
from viewkeeper.catalog import view_join_digraph
from viewkeeper.datagen import GenParams, gen_dataset, random_university_batch
from viewkeeper.gluing import materialize_plan
from viewkeeper.maintenance import oracle_mismatches
from viewkeeper.reports import merged_counts_tsv
from viewkeeper.sqlparse import parse_view

pytestmark = pytest.mark.acceptance


def record(n: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  criterion {n}: {detail}")


def test_criterion_1_default_counts(catalog, views):
    start = time.perf_counter()
    db = gen_dataset(GenParams())
    view = views["results_IT"]
    report = tuple_count_report(db, view, derive_av_set(catalog, view))
    elapsed = time.perf_counter() - start
    got = report.to_tsv()
    want = (GOLDEN / "counts_results_IT_default.tsv").read_text()
    t = report.total
    ok = got == want and elapsed < 5.0
    record(1, ok, f"results_IT totals ({t.base},{t.pass_local},{t.av}) in {elapsed:.2f}s")
    assert got == want
    assert elapsed < 5.0


def test_criterion_2_sessions100_counts(catalog, views):
    db = gen_dataset(GenParams(sessions_it=100))
    view = views["results_BBA"]
    report = tuple_count_report(db, view, derive_av_set(catalog, view))
    courses = report.row("Courses")
    got = report.to_tsv()
    ok = (courses.base, courses.pass_local, courses.av) == (1000, 100, 4) and report.total.av == 125
    ok = ok and got == (GOLDEN / "counts_results_BBA_sessions100.tsv").read_text()
    record(
        2, ok,
        f"Courses ({courses.base},{courses.pass_local},{courses.av}), AV total {report.total.av}",
    )
    assert (courses.base, courses.pass_local, courses.av) == (1000, 100, 4)
    assert report.total.av == 125
    assert got == (GOLDEN / "counts_results_BBA_sessions100.tsv").read_text()


def _glued_counts(db, avsets):
    """Glued extent sizes, from the engine and from the brute-force oracle."""
    plan = merge_av_sets(db, avsets[0], avsets[1], policy="always")
    store = materialize_plan(db, plan)
    env_rows = {}
    for s in avsets:
        for name, rows in brute_force_avset(db, s).items():
            attrs = s.avs[next(r for r, a in s.avs.items() if a.name == name)].attributes
            env_rows[name] = [dict(zip(attrs, row)) for row in rows]
    engine, oracle = {}, {}
    for unit in plan.glued():
        engine[unit.source_relation] = len(store[unit.name])
        oracle[unit.source_relation] = len(brute_force_av(db, unit, env_rows))
    return plan, engine, oracle


def test_criterion_3_merged_counts(catalog, views, uni_db_shared):
    db = uni_db_shared
    vs = [views["results_IT"], views["results_BBA"]]

    with_ri = [derive_av_set(catalog, v) for v in vs]
    _, engine, oracle = _glued_counts(db, with_ri)
    cost_plan = merge_av_sets(db, *with_ri)
    measured = {d.relation: d.glued_count for d in cost_plan.decisions}
    table = merged_counts_tsv(cost_plan, ri_pruning=True)
    course_line = next(line for line in table.splitlines() if line.startswith("aux_Course12"))

    without = [derive_av_set(catalog, v, ri_pruning=False) for v in vs]
    plain_plan, engine_no, oracle_no = _glued_counts(db, without)
    students = [len(brute_force_avset(db, s)[s.avs["Student"].name]) for s in without]

    want = {"Department": 2, "Student": 240, "Courses": 6}
    ok = engine == oracle == measured == want
    ok = ok and course_line.split("\t")[6:8] == ["8", "-2"]
    ok = ok and students == [3000, 3000] and engine_no["Student"] == oracle_no["Student"] == 3000
    record(
        3, ok,
        f"aux_Dep12={engine['Department']} aux_Std12={engine['Student']} "
        f"aux_Course12={engine['Courses']} (published 8, logged); without RI students "
        f"{students[0]}+{students[1]}={sum(students)} separate vs {engine_no['Student']} glued",
    )
    assert engine == oracle == measured == want
    assert course_line.split("\t")[6:8] == ["8", "-2"]
    assert students == [3000, 3000]
    assert sum(students) == 6000
    assert engine_no["Student"] == oracle_no["Student"] == 3000


def _intra_batch_fk(catalog, batch) -> bool:
    for rel, rows in batch.items():
        schema = catalog.relations[rel]
        for fk in schema.foreign_keys:
            if fk.target not in batch:
                continue
            target = catalog.relations[fk.target]
            new_keys = {tuple(r[target.index(a)] for a in fk.target_attributes) for r in batch[fk.target]}
            if any(tuple(r[schema.index(a)] for a in fk.attributes) in new_keys for r in rows):
                return True
    return False


def test_criterion_4_self_maintenance(catalog, views, uni_db):
    db = uni_db
    vs = [views["results_IT"], views["results_BBA"]]
    rng = random.Random(4)
    start = time.perf_counter()
    plan = fold_av_sets(db, [derive_av_set(catalog, v) for v in vs])
    # Build from a throwaway copy, then gut it: a hidden reference would break.
    scratch = db.copy()
    state = init_state(scratch, vs, plan)
    scratch.tables.clear()
    leaked = reachable_instances(state, BASE_KINDS)
    failures, multi, intra, changed = [], 0, 0, 0
    for i in range(100):
        batch = random_university_batch(db, rng)
        multi += len(batch) > 1
        intra += _intra_batch_fk(catalog, batch)
        insert_batch(db, batch)
        delta = apply_batch(state, batch)
        changed += bool(delta)
        failures += [f"batch {i}: {p}" for p in oracle_mismatches(state, db)]
    leaked += reachable_instances(state, BASE_KINDS)
    elapsed = time.perf_counter() - start
    ok = not failures and not leaked and elapsed < 60 and multi > 0 and intra > 0
    record(
        4, ok,
        f"100 batches ({multi} multi-relation, {intra} with intra-batch FKs, {changed} changed a view), "
        f"{len(failures)} oracle mismatches, base data reachable from state: {bool(leaked)}, {elapsed:.1f}s",
    )
    assert failures == []
    assert leaked == []
    assert elapsed < 60
    assert multi > 0 and intra > 0 and changed > 0


def test_criterion_5_pruning_soundness(catalog, views, uni_db):
    db = uni_db
    vs = [views["results_IT"], views["results_BBA"]]
    plan = fold_av_sets(db, [derive_av_set(catalog, v) for v in vs])
    state = init_state(db, vs, plan)
    indeg = {v.name: dict(view_join_digraph(catalog, v).in_degree()) for v in vs}
    rng = random.Random(5)
    current = {v.name: evaluate_view(db, v).rows for v in vs}
    nonempty, miscounted, checked = [], [], 0
    for i in range(1000):
        rel = rng.choice(sorted(catalog.relations))
        batch = random_university_batch(db, rng, relations=[rel])
        before = state.stats.copy()
        insert_batch(db, batch)
        apply_batch(state, batch)
        for v in vs:
            if indeg[v.name][rel] == 0:
                if rel == "Results":
                    current[v.name] = evaluate_view(db, v).rows
                continue
            checked += 1
            after = evaluate_view(db, v).rows
            if after != current[v.name]:
                nonempty.append(f"insertion {i} into {rel} changed {v.name}")
            current[v.name] = after
            if (
                state.stats[v.name, "skipped"] != before[v.name, "skipped"] + 1
                or state.stats[v.name, "evaluated"] != before[v.name, "evaluated"]
            ):
                miscounted.append(f"insertion {i} into {rel} evaluated {v.name}")
    ok = not nonempty and not miscounted and checked > 0
    record(
        5, ok,
        f"1000 single-relation insertions, {checked} view checks with in-degree >= 1: "
        f"{len(nonempty)} non-empty oracle deltas, {len(miscounted)} evaluated despite pruning",
    )
    assert nonempty == []
    assert miscounted == []


def _av_pairs(rng: random.Random):
    """Glued units of two views over one random database, with both parents."""
    inst = random_instance(rng, views=2, max_rows=40)
    views = inst.views
    if rng.random() < 0.1:
        # glue a view with a renamed copy of itself
        text = inst.view_texts[0].replace("CREATE VIEW V1", "CREATE VIEW V2", 1)
        views = [views[0], parse_view(text, inst.catalog)]
    avsets = [derive_av_set(inst.catalog, v) for v in views]
    plan = merge_av_sets(inst.db, avsets[0], avsets[1], policy="always")
    store = materialize_plan(inst.db, plan)
    direct = {}
    for s in avsets:
        direct.update(brute_force_avset(inst.db, s))
    for unit in plan.glued():
        yield inst, unit, store, direct


def test_criterion_6_gluing(catalog):
    rng = random.Random(6)
    pairs, bad = 0, []
    while pairs < 200:
        for inst, unit, store, direct in _av_pairs(rng):
            assert sum(len(t.rows) for t in inst.db.tables.values()) <= 1000
            pairs += 1
            for which in (1, 2):
                parent = unit.parent(which)
                if reconstruct_av(unit, which, store).rows != direct[parent.name]:
                    bad.append(f"{unit.name} parent {which}")
    crng = random.Random(66)
    wrong = 0
    for _ in range(10_000):
        n1, n2 = crng.randrange(0, 10**6), crng.randrange(0, 10**6)
        b1, b2 = crng.randrange(0, 300), crng.randrange(0, 300)
        shared = crng.randrange(0, min(b1, b2) + 1)
        c = crng.randrange(0, n1 + n2 + 1)
        d = glue_cost(n1, n2, b1, b2, shared, c)
        glued, separate = c * (b1 + b2 - shared), n1 * b1 + n2 * b2
        if (d.glued_cost, d.separate_cost, d.chose_glue) != (glued, separate, glued <= separate):
            wrong += 1
        if d.chose_glue != (d.glued_cost <= d.separate_cost):
            wrong += 1
    ok = not bad and wrong == 0
    record(
        6, ok,
        f"{pairs} glued pairs, {len(bad)} reconstruction mismatches; "
        f"10000 cost tuples, {wrong} inconsistent decisions",
    )
    assert bad == []
    assert wrong == 0


def test_criterion_7_spj_oracle():
    rng = random.Random(7)
    mismatches, rows, joins, nonempty = [], 0, 0, 0
    for i in range(100):
        inst = random_instance(rng, max_rows=40)
        total = sum(len(t.rows) for t in inst.db.tables.values())
        assert total <= 10**4
        rows += total
        joins += len(inst.view.joins)
        got = evaluate_view(inst.db, inst.view).rows
        want = brute_force_view(inst.db, inst.view)
        nonempty += bool(want)
        if got != want:
            mismatches.append(i)
    ok = not mismatches
    record(
        7, ok,
        f"100 random instances ({rows} rows, {joins} join edges, {nonempty} non-empty results), "
        f"{len(mismatches)} mismatches",
    )
    assert mismatches == []


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-rN"]))
