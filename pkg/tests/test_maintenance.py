import random
from decimal import Decimal

import pytest
from helpers import BASE_KINDS, random_instance, reachable_instances
from hypothesis import given, settings
from hypothesis import strategies as st

from viewkeeper.avderive import derive_av_set
from viewkeeper.datagen import SESSION, random_batch, random_university_batch
from viewkeeper.errors import IntegrityError, PlanError
from viewkeeper.gluing import fold_av_sets, merge_av_sets, separate_plan
from viewkeeper.maintenance import (
    apply_batch,
    av_delta,
    init_state,
    mv_delta,
    oracle_mismatches,
)
from viewkeeper.relstore import Database, evaluate_view, insert_batch


def pick(db, rel, **where):
    schema = db.catalog.relations[rel]
    for row in sorted(db.tables[rel].rows.values()):
        if all(row[schema.index(a)] == v for a, v in where.items()):
            return row
    raise LookupError(where)


def dept_no(db, name):
    return pick(db, "Department", Dep_name=name)[0]


def make_state(db, views, policy="cost"):
    vs = [views["results_IT"], views["results_BBA"]]
    plan = merge_av_sets(db, *(derive_av_set(db.catalog, v) for v in vs), policy=policy)
    return init_state(db.copy(), vs, plan)


def snapshot(state):
    return (
        {k: set(v.rows) for k, v in state.mvs.items()},
        {k: set(v.rows) for k, v in state.avs.items()},
        dict(state.stats),
    )


def test_init_state_glued(uni_db_shared, views):
    state = make_state(uni_db_shared, views, policy="always")
    assert len(state.mvs) == 2
    assert len(state.plan.glued()) == 3 and len(state.avs) == 3
    assert reachable_instances(state, BASE_KINDS) == []


def test_init_state_empty(catalog, views):
    state = make_state(Database(catalog), views)
    assert all(len(m) == 0 for m in state.mvs.values())
    assert all(len(a) == 0 for a in state.avs.values())


def test_init_state_plan_mismatch(uni_db_shared, views, catalog):
    plan = separate_plan(catalog, [derive_av_set(catalog, views["results_IT"])])
    with pytest.raises(PlanError):
        init_state(uni_db_shared, [views["results_BBA"]], plan)


def test_walker_finds_planted_database(uni_db_shared, views):
    state = make_state(uni_db_shared, views)
    state.stash = [{"db": uni_db_shared}]
    assert reachable_instances(state, BASE_KINDS)


@pytest.mark.parametrize("policy", ["cost", "always"])
def test_av_delta_student(uni_db, views, policy):
    state = make_state(uni_db, views, policy)
    it = dept_no(uni_db, "IT")
    row = (3001, "Ali", "x", Decimal("900"), it)
    out = av_delta(state, "Student", [row])
    assert sum(len(v) for v in out.values()) == 1
    # the IT auxiliary view gains it, the BBA one does not
    apply_batch(state, {"Student": [row]})
    assert len(state.store[state.logical_av("results_IT", "Student").name]) == 121
    assert len(state.store[state.logical_av("results_BBA", "Student").name]) == 120


def test_unrelated_department_changes_nothing(uni_db, views):
    state = make_state(uni_db, views, "always")
    before = snapshot(state)
    assert all(not v for v in av_delta(state, "Department", [(26, "Math", "Dr.K")]).values())
    delta = apply_batch(
        state,
        {"Department": [(27, "IT2", "Dr.Q")], "Student": [(3001, "Ali", "x", Decimal("900"), 27)]},
    )
    assert not delta
    assert snapshot(state)[:2] == before[:2]


def test_mv_delta_results_row(uni_db, views):
    state = make_state(uni_db, views)
    it = dept_no(uni_db, "IT")
    student = pick(uni_db, "Student", Dep_no=it)
    course = pick(uni_db, "Courses", Dep_no=it, Session=SESSION)
    row = (5001, student[0], course[0], Decimal("3.5"))
    delta = mv_delta(state, "Results", [row])
    assert len(delta["results_IT"]) == 1
    assert not delta["results_BBA"]


def test_mv_delta_skips_referenced_relation(uni_db, views):
    state = make_state(uni_db, views)
    delta = mv_delta(state, "Student", [(3001, "Ali", "x", Decimal("900"), dept_no(uni_db, "IT"))])
    assert not delta
    assert state.stats["results_IT", "skipped"] == 1
    assert state.stats["results_IT", "evaluated"] == 0


def test_mv_delta_other_department(uni_db, views):
    state = make_state(uni_db, views)
    other = pick(uni_db, "Department", Dep_no=3)
    student = pick(uni_db, "Student", Dep_no=other[0])
    course = pick(uni_db, "Courses", Dep_no=other[0])
    assert not mv_delta(state, "Results", [(5001, student[0], course[0], Decimal("2.0"))])


def test_apply_batch_student_then_result(uni_db, views):
    state = make_state(uni_db, views, "always")
    it = dept_no(uni_db, "IT")
    course = pick(uni_db, "Courses", Dep_no=it, Session=SESSION)
    batch = {
        "Results": [(5001, 3001, course[0], Decimal("3.9"))],
        "Student": [(3001, "Ali", "x", Decimal("900"), it)],
    }
    delta = apply_batch(state, batch)
    assert len(delta["results_IT"]) == 1
    insert_batch(uni_db, batch)
    assert oracle_mismatches(state, uni_db) == []


def test_empty_batch(uni_db, views):
    state = make_state(uni_db, views)
    before = snapshot(state)
    assert not apply_batch(state, {})
    assert not apply_batch(state, {"Student": []})
    assert snapshot(state) == before


@pytest.mark.parametrize(
    "batch",
    [
        {"Department": [(26, "IT", "a"), (26, "BBA", "b")]},
        {"Department": [(1, "IT", "again")]},
        {"Student": [(3001, "Ali", "x", "not a number", 1)]},
        {"Nope": [(1,)]},
        {"Department": [(26, "IT", "a")], "Student": [(3001, "Ali", "x", Decimal("1"), 1, 9)]},
    ],
)
def test_failed_batch_leaves_state(uni_db, views, batch):
    state = make_state(uni_db, views, "always")
    before = snapshot(state)
    with pytest.raises(IntegrityError):
        apply_batch(state, batch)
    assert snapshot(state) == before


def test_order_insensitive(uni_db, views):
    rng = random.Random(3)
    batch = random_university_batch(uni_db, rng, relations=["Department", "Student", "Courses", "Results"])
    a, b = make_state(uni_db, views), make_state(uni_db, views)
    apply_batch(a, batch, order=["Department", "Student", "Courses", "Results"])
    apply_batch(b, batch, order=["Department", "Courses", "Student", "Results"])
    assert snapshot(a)[:2] == snapshot(b)[:2]
    with pytest.raises(ValueError):
        apply_batch(a, batch, order=["Student", "Department", "Courses", "Results"])
    with pytest.raises(ValueError):
        apply_batch(a, batch, order=["Department"])


@settings(max_examples=120, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["cost", "always", "never"]))
def test_random_schema_self_maintenance(seed, policy):
    rng = random.Random(seed)
    inst = random_instance(rng, views=rng.choice((1, 2, 3)), max_rows=10)
    db = inst.db
    sets = [derive_av_set(inst.catalog, v) for v in inst.views]
    plan = fold_av_sets(db, sets, policy=policy)
    state = init_state(db.copy(), inst.views, plan)
    for _ in range(6):
        before = snapshot(state)
        batch = random_batch(db, rng)
        insert_batch(db, batch)
        apply_batch(state, batch)
        assert oracle_mismatches(state, db) == []
        after = snapshot(state)
        # extents only grow
        for old, new in zip(before[:2], after[:2]):
            assert all(old[k] <= new[k] for k in old)
    for v in inst.views:
        assert state.mvs[v.name] == evaluate_view(db, v)
