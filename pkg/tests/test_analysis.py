from __future__ import annotations

import itertools
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hideseek.analysis import (
    equal_times_mixture,
    existence_certificate,
    in_no_pure_interval,
    lambda_1,
    lambda_star,
    no_pure_interval,
    q_star,
    q_star_for_times,
    r_star,
    restricted_game_solve,
    two_box_solution,
    value_equal_q,
    value_q1,
)
from hideseek.core import GameSpec, HiderStrategy, MixedSearchStrategy, SearchSequence, ValidationError
from hideseek.gittins import best_response, consistent_sequences, equalizing_strategy
from hideseek.lp import solve_matrix_game
from hideseek.payoff import expected_time, expected_time_mixed

times = st.fractions(F(1, 2), 4, max_denominator=4)


def equal_q(t, q):
    return GameSpec.build(t, [q] * len(t))


def permutation_game_value(t):
    """Oracle for q = 1: solve the n! x n matrix game over search orders."""
    spec = GameSpec.build(t, [1] * len(t))
    orders = [SearchSequence.periodic(p) for p in itertools.permutations(range(len(t)))]
    matrix = [[expected_time(spec, i, s) for s in orders] for i in range(len(t))]
    return solve_matrix_game(matrix)[0]


def test_value_q1_examples():
    assert value_q1(GameSpec.build([1, 1], [1, 1])).value == F(3, 2)
    spec = GameSpec.build([1, 4], [1, 1])
    report = value_q1(spec)
    assert report.value == F(21, 5)
    # hand check: (1,2) w.p. 1/5 and (2,1) w.p. 4/5 against either box
    for i, want in enumerate([1 * F(1, 5) + 5 * F(4, 5), 5 * F(1, 5) + 4 * F(4, 5)]):
        assert want == F(21, 5) == expected_time_mixed(spec, _point(2, i), report.searcher_optimal)
    three = [F(2), F(288, 100), F(512, 100)]
    assert value_q1(GameSpec.build(three, [1] * 3)).value == permutation_game_value(three)
    with pytest.raises(ValidationError):
        value_q1(equal_q([1, 1], F(1, 2)))


def _point(n, i):
    return HiderStrategy.point(n, i)


@settings(max_examples=15, deadline=None)
@given(st.lists(times, min_size=1, max_size=4))
def test_value_q1_matches_permutation_game(t):
    assert value_q1(GameSpec.build(t, [1] * len(t))).value == permutation_game_value(t)


def test_value_equal_q_examples():
    assert value_equal_q(equal_q([1, 1], F(1, 2))).value == F(7, 2)
    spec = equal_q([1, 1], F(2, 3))
    cycles = [SearchSequence.parse("(1,2)"), SearchSequence.parse("(2,1)")]
    assert value_equal_q(spec).value == restricted_game_solve(spec, cycles).value == F(5, 2)
    with pytest.raises(ValidationError):
        value_equal_q(GameSpec.build([1, 1], [F(1, 2), F(1, 3)]))


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 4), times, st.fractions(F(1, 10), F(9, 10), max_denominator=10))
def test_equal_times_two_sequence_mixture(n, t, q):
    spec = equal_q([t] * n, q)
    value = value_equal_q(spec).value
    theta = equal_times_mixture(spec)
    assert len(theta.support) == 2
    for i in range(n):
        assert expected_time_mixed(spec, _point(n, i), theta) == value


def test_restricted_game_examples():
    spec = equal_q([1, 1], F(1, 2))
    single = restricted_game_solve(spec, [SearchSequence.parse("(1,2)")], [0])
    assert single.value == F(3)
    three = equal_q([2, F(288, 100), F(512, 100)], F(1, 5))
    cycles = [s for _, s in consistent_sequences(three)]
    assert restricted_game_solve(three, cycles).value == value_equal_q(three).value
    with pytest.raises(ValidationError):
        restricted_game_solve(spec, [SearchSequence.parse("1,(1)")])


def test_lambda_star_examples():
    assert lambda_star(equal_q([1, 1], F(1, 2)))[0] == F(1, 2)
    assert lambda_star(GameSpec.build([3], [F(1, 2)]))[0] == 1
    spec = equal_q([1, 4], F(4, 5))
    assert lambda_star(spec)[0] <= q_star(spec) == F(4, 5)


@settings(max_examples=30, deadline=None)
@given(st.lists(times, min_size=1, max_size=6))
def test_q_star_at_least_half(t):
    assert q_star_for_times(t) >= F(1, 2)


@settings(max_examples=15, deadline=None)
@given(st.lists(times, min_size=2, max_size=3), st.fractions(F(1, 10), F(9, 10), max_denominator=10))
def test_lambda_star_below_q_star(t, q):
    spec = equal_q(t, q)
    assert lambda_star(spec)[0] <= q_star(spec)


def test_q_star_examples():
    assert q_star(equal_q([1, 4], F(1, 2))) == F(4, 5)
    assert q_star(equal_q([2, 2, 2], F(1, 2))) == F(1, 2)


def test_q_star_tight_three_box_family():
    # t_2^2 = t_1 t_3 makes q* = (t2^2 + t2 t3 + t3^2) / ((t1 + t2 + t3)(t2 + t3))
    t = [F(1), F(2), F(4)]
    spec = equal_q(t, q_star_for_times(t))
    assert spec.detection[0] == (4 + 8 + 16) / F(7 * 6)
    value = value_equal_q(spec).value
    seq = SearchSequence.parse("3,2,1,(1,2,3)")
    assert [expected_time(spec, i, seq) for i in range(3)] == [value] * 3


def test_no_pure_interval_examples():
    lo, hi = no_pure_interval(equal_q([1, 4], F(1, 2)))
    assert lo == pytest.approx(1 - 5**-0.5, abs=1e-12) and hi == pytest.approx((1 + 5**-0.5) / 2, abs=1e-12)
    # the quoted interval (0.553, 0.723) is the exact one rounded inwards
    assert lo < 0.553 < 0.723 < hi and 0.553 - lo < 1e-3 and hi - 0.723 < 1e-3
    assert no_pure_interval(equal_q([1, 1], F(1, 2))) is None
    assert no_pure_interval(equal_q([1, 3], F(1, 2))) is None


@settings(max_examples=40, deadline=None)
@given(times, times, st.fractions(F(1, 100), F(99, 100), max_denominator=100))
def test_interval_membership_matches_float_bounds(t1, t2, q):
    spec = equal_q([t1, t2], q)
    bounds = no_pure_interval(spec)
    inside = in_no_pure_interval(spec)
    if bounds is None:
        assert not inside
    elif min(abs(float(q) - b) for b in bounds) > 1e-9:
        assert inside == (bounds[0] < float(q) < bounds[1])


def test_certificate_examples():
    three = equal_q([2, F(288, 100), F(512, 100)], F(1, 5))
    cert = existence_certificate(three)
    assert cert.verdict == "exists" and cert.rule == "equal-q<=1/n"
    assert cert.witness == SearchSequence.parse("1,2,3,2,3,1,2,3,1,3,1,2,(3,1,2)")
    assert cert.witness_gap(three) == 0
    no = existence_certificate(equal_q([1, 1], F(9, 10)))
    assert no.verdict == "not_exists" and no.witness is None and no.bound_values["q_star"] == F(1, 2)
    tight = existence_certificate(equal_q([1, 4], F(4, 5)))
    assert tight.verdict == "exists" and tight.witness == SearchSequence.parse("2,1,(1,2)")
    inside = existence_certificate(equal_q([1, 4], F(3, 5)))
    assert inside.verdict == "not_exists" and inside.rule == "two-box no-pure interval"


@settings(max_examples=15, deadline=None)
@given(st.lists(times, min_size=2, max_size=3), st.integers(1, 4))
def test_witness_attains_value(t, scale):
    spec = equal_q(t, F(1, len(t) * scale))
    cert = existence_certificate(spec)
    assert cert.verdict == "exists"
    if cert.witness is not None:
        assert [expected_time(spec, i, cert.witness) for i in range(spec.n)] == [cert.value] * spec.n
    else:
        assert cert.synthesis.schedule.aperiodic
        for lo, hi in cert.synthesis.enclosures:
            assert lo <= cert.value <= hi


@pytest.mark.parametrize(
    "t, r, k",
    [([1, 2], F(9, 16), (1, 2)), ([3, 1], F(16, 25), (2, 1)), ([2, 1], F(25, 36), (1, 2)), ([1, 1], F(49, 64), (1, 2))],
)
def test_two_box_large_root(t, r, k):
    spec = GameSpec.from_root(t, r, k)
    cert = existence_certificate(spec)
    assert cert.verdict == "exists" and cert.rule == "two-box r>=1/2"
    sol = two_box_solution(spec)
    # the saddle hider cannot be beaten by its own Gittins best response
    run = best_response(spec, sol.hider, horizon=400)
    assert run.sequence is not None
    assert expected_time_mixed(spec, sol.hider, MixedSearchStrategy.pure(run.sequence)) == sol.value
    for i in range(2):
        assert expected_time_mixed(spec, _point(2, i), sol.mixture) <= sol.value
    if cert.witness is not None:
        assert cert.witness_gap(spec) == 0
    else:
        assert cert.witness_gap(spec) < F(1, 10**20)


@settings(max_examples=20, deadline=None)
@given(st.data())
def test_equalizing_payoff_identity(data):
    spec = equal_q([data.draw(times) for _ in range(3)], F(1, 4))
    value = value_equal_q(spec).value
    blocks = [s.cycle for _, s in consistent_sequences(spec)]
    choice = data.draw(st.lists(st.integers(0, len(blocks) - 1), min_size=1, max_size=6))
    lead = data.draw(st.lists(st.integers(0, len(blocks) - 1), max_size=4))
    seq = SearchSequence(tuple(b for j in lead for b in blocks[j]), tuple(b for j in choice for b in blocks[j]))
    assert expected_time_mixed(spec, equalizing_strategy(spec), MixedSearchStrategy.pure(seq)) == value


def test_r_star_bracket():
    value = r_star(1)
    assert value == pytest.approx(0.216757, abs=1e-5)
    for r, inside in ((value - 1e-6, True), (value + 1e-6, False)):
        lam = float(lambda_1(1, r))
        assert (r < min(lam, 1 - lam)) is inside
