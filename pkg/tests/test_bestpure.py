from __future__ import annotations

from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hideseek.bestpure import (
    DEPTH_CAP,
    SearchNode,
    _Bounder,
    best_pure_two_box,
    conjecture1_scan,
    conjecture_candidate,
    conjecture_closed_form,
    default_tails,
    equalized_payoff_check,
)
from hideseek.core import GameSpec, SearchSequence, ValidationError
from hideseek.payoff import expected_time


def two_box(q, t=(1, 1)):
    return GameSpec.build(t, [q, q])


def test_half_is_globally_optimal():
    result = best_pure_two_box(two_box(F(1, 2)), 8)
    assert result.value == F(7, 2) and result.slack == 0
    assert set(result.ties) == {SearchSequence.parse("1,2,(2,1)"), SearchSequence.parse("2,1,(1,2)")}


def test_zero_slack_sequences_are_equalized():
    spec = two_box(F(1, 2))
    for seq in best_pure_two_box(spec, 8).ties:
        check = equalized_payoff_check(spec, seq)
        assert check.equal and check.value == F(7, 2)


def test_unique_zero_slack_at_threshold():
    spec = two_box(F(4, 5), (1, 4))
    for depth in (2, 5, 8):
        result = best_pure_two_box(spec, depth)
        assert result.slack == 0
        assert result.ties == [SearchSequence.parse("2,1,(1,2)")]


def test_equalized_payoff_examples():
    check = equalized_payoff_check(two_box(F(2, 3)), SearchSequence.parse("1,2,(2,2,1,1)"))
    assert check.equal and check.value == F(31, 12)
    long = SearchSequence.parse("1,2,1,2,2,2,2,1,1,2,1,2,1,1,1,2,(2,1)")
    assert equalized_payoff_check(two_box(F(1, 2)), long).value == F(923, 256)
    skew = equalized_payoff_check(two_box(F(1, 2)), SearchSequence.parse("(1,2)"))
    assert not skew.equal and skew.difference < 0


@pytest.mark.parametrize("m, value", [(2, F(7, 2)), (3, F(31, 12)), (4, F(197, 84))])
def test_conjecture_closed_form(m, value):
    assert conjecture_closed_form(m) == value


@pytest.mark.parametrize("m", [2, 3, 4, 5, 6])
def test_candidate_matches_closed_form(m):
    spec = two_box(F(m - 1, m))
    cand = conjecture_candidate(m)
    assert [expected_time(spec, i, cand) for i in range(2)] == [conjecture_closed_form(m)] * 2


def test_conjecture_scan_m2():
    report = conjecture1_scan(2, 6)
    assert not report.beaten and report.search.value == F(7, 2)
    assert report.forced_prefix[:2] == (0, 1)


def test_blocks_mode_and_tails():
    spec = two_box(F(1, 2))
    result = best_pure_two_box(spec, 4, mode="blocks")
    assert result.value == F(7, 2)
    tails = default_tails(spec, "boxes", 3)
    assert SearchSequence.parse("(1,2)") in tails and SearchSequence.parse("(1,1,2)") in tails
    assert all(0 in t.cycle and 1 in t.cycle for t in tails)


def test_validation():
    with pytest.raises(ValidationError):
        best_pure_two_box(two_box(F(1, 2)), DEPTH_CAP + 1)
    with pytest.raises(ValidationError):
        best_pure_two_box(GameSpec.build([1, 1, 1], ["1/2"] * 3), 2)
    with pytest.raises(ValidationError):
        best_pure_two_box(two_box(F(1, 2)), 2, mode="pairs")


@settings(max_examples=40, deadline=None)
@given(
    st.sampled_from([F(1, 2), F(2, 3), F(3, 4), F(1, 3)]),
    st.sampled_from([(1, 1), (1, 2), (1, 4)]),
    st.lists(st.integers(0, 1), max_size=6),
    st.lists(st.integers(0, 1), max_size=3),
    st.lists(st.integers(0, 1), min_size=1, max_size=4),
)
def test_bound_is_admissible(q, t, prefix, head, cycle):
    spec = two_box(q, t)
    node = SearchNode((), (), (0, 0), (1, 1), 0, (0, 0))
    for b in prefix:
        node = node.extend(spec, b, (b,))
    bound = _Bounder(spec).bound(node)
    seq = SearchSequence(tuple(prefix) + tuple(head), tuple(cycle))
    worst = max(expected_time(spec, i, seq) for i in range(2))
    assert bound <= worst
