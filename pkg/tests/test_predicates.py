from decimal import Decimal

import pytest
from hypothesis import given
from hypothesis import strategies as st

from viewkeeper import predicates as P

values = st.one_of(
    st.integers(-100, 100),
    st.decimals(min_value=-100, max_value=100, places=2),
    st.text("abc' ", max_size=4),
)
comparisons = st.builds(
    P.Comparison, st.sampled_from(["a", "b"]), st.sampled_from(sorted(P.OPERATORS)), values
)
memberships = st.builds(
    P.Membership, st.just(("a",)), st.sampled_from(["aux_x", "aux_y"]), st.just(("k",))
)
predicates = st.recursive(
    st.one_of(comparisons, memberships),
    lambda inner: st.one_of(
        st.builds(lambda ts: P.And(tuple(ts)), st.lists(inner, min_size=2, max_size=3)),
        st.builds(lambda ts: P.Or(tuple(ts)), st.lists(inner, min_size=2, max_size=3)),
    ),
    max_leaves=6,
)


@given(predicates)
def test_json_round_trip(pred):
    assert P.from_json(P.to_json(pred)) == pred


def test_conjoin_disjoin():
    a = P.Comparison("x", "=", 1)
    b = P.Comparison("y", "<", Decimal("2.5"))
    assert P.conjoin([]) is None
    assert P.conjoin([a, None]) == a
    assert P.conjoin([a, b]) == P.And((a, b))
    assert P.disjoin([a, a]) == a
    # an unconditional side makes the disjunction unconditional
    assert P.disjoin([a, None]) is None


def test_compile_with_membership():
    pred = P.And((P.Comparison("a", ">", 1), P.Membership(("b",), "aux", ("k",))))
    test = P.compile_predicate(pred, ("a", "b"), lambda name, attrs: {10, 20})
    assert test((2, 10))
    assert not test((1, 10))
    assert not test((2, 30))


def test_render():
    pred = P.Or((P.Comparison("Dep_name", "=", "IT"), P.Comparison("Dep_name", "=", "O'Neil")))
    assert P.render(pred) == "Dep_name = 'IT' OR Dep_name = 'O''Neil'"
    nested = P.And((P.Comparison("Session", "=", "2010-2014"), pred))
    assert P.render(nested) == "Session = '2010-2014' AND (Dep_name = 'IT' OR Dep_name = 'O''Neil')"


def test_unknown_operator():
    with pytest.raises(ValueError):
        P.Comparison("a", "~", 1)
