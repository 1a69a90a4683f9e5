from __future__ import annotations

from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hideseek.core import GameSpec, MixedSearchStrategy, SearchSequence, ValidationError
from hideseek.payoff import expected_time
from hideseek.synthesis import (
    BlockSchedule,
    block_form,
    enumerate_schedules,
    feasible_choices,
    greedy_schedule,
    interleave,
    never_periodic,
    pure_from_mixed,
    schedule_to_weights,
    search_schedule,
)

EXAMPLE_WEIGHTS = [F(1, 5), F(36, 125), F(64, 125)]


def truncated_weights(schedule: BlockSchedule, terms: int = 200):
    """Oracle: sum the first *terms* geometric weights one choice at a time."""
    out = [F(0)] * len(schedule.weights)
    r = schedule.ratio
    choices = schedule.choices(terms)
    for k, x in enumerate(choices):
        out[x] += (1 - r) * r**k
    return out


def test_worked_example_schedule():
    sched = greedy_schedule(EXAMPLE_WEIGHTS, F(4, 5))
    assert SearchSequence(sched.prefix, sched.cycle) == SearchSequence.parse("1,2,2,3,(3)")


def test_small_examples():
    assert greedy_schedule([F(1)], F(1, 3)).cycle == (0,)
    half = greedy_schedule([F(1, 2), F(1, 2)], F(1, 2))
    assert SearchSequence(half.prefix, half.cycle).canonical().format() == "1,(2)"
    assert schedule_to_weights(half) == [F(1, 2), F(1, 2)]


def test_schedule_to_weights_examples():
    sched = BlockSchedule((0, 1, 1, 2), (2,), tuple(EXAMPLE_WEIGHTS), F(4, 5))
    assert schedule_to_weights(sched) == EXAMPLE_WEIGHTS
    gap = sum(a - b for a, b in zip(EXAMPLE_WEIGHTS, truncated_weights(sched)))
    assert 0 <= gap <= F(4, 5) ** 200
    const = BlockSchedule((), (0,), (F(1), F(0), F(0)), F(1, 2))
    assert schedule_to_weights(const) == [1, 0, 0]


def test_refuses_below_threshold():
    with pytest.raises(ValidationError):
        greedy_schedule([F(1, 3)] * 3, F(1, 2))
    # sharpness: any first choice already carries 1 - r > 1/M of the weight
    assert feasible_choices([F(1, 3)] * 3, F(1, 2)) == []
    with pytest.raises(ValidationError):
        greedy_schedule([F(1, 2), F(1, 3)], F(1, 2))


def test_enumerate_examples():
    two = enumerate_schedules([F(1, 2), F(1, 2)], F(1, 2), 1)
    assert sorted(s.prefix[0] for s in two) == [0, 1]
    three = enumerate_schedules(EXAMPLE_WEIGHTS, F(4, 5), 1)
    assert sorted(s.prefix[0] for s in three) == [0, 1, 2]
    for s in three:
        if s.periodic:
            assert schedule_to_weights(s) == EXAMPLE_WEIGHTS
        else:
            # opening with block 2 or 3 brings a factor 2 into the deficit
            # denominators, so the deficits can never repeat
            assert s.aperiodic and s.prefix[0] != 0
            got = schedule_to_weights(s)
            assert all(0 <= lam - g <= s.residual for lam, g in zip(EXAMPLE_WEIGHTS, got))
    assert feasible_choices(EXAMPLE_WEIGHTS, F(4, 5), [0]) == [1, 2]
    with pytest.raises(ValidationError):
        enumerate_schedules(EXAMPLE_WEIGHTS, F(4, 5), 2)


def test_interleave_and_block_form():
    sched = greedy_schedule(EXAMPLE_WEIGHTS, F(4, 5))
    blocks = [(0, 1, 2), (1, 2, 0), (2, 0, 1)]
    seq = interleave(blocks, sched)
    assert seq == SearchSequence.parse("1,2,3,2,3,1,2,3,1,3,1,2,(3,1,2)")
    assert seq.canonical().format() == "1,2,3,2,3,1,2,3,1,(3,1,2)"
    spec = GameSpec.build([1, 1], ["1/2", "1/2"])
    with pytest.raises(ValidationError):
        block_form(spec, MixedSearchStrategy.pure(SearchSequence.parse("1,(1,2)")))


def test_pure_from_mixed_examples():
    spec = GameSpec.build([1, 1], ["1/2", "1/2"])
    theta = MixedSearchStrategy(((SearchSequence.parse("(1,2)"), F(1, 2)), (SearchSequence.parse("(2,1)"), F(1, 2))))
    result = pure_from_mixed(spec, theta)
    assert result.sequence.format() == "1,2,(2,1)" and result.payoffs == [F(7, 2), F(7, 2)]
    point = pure_from_mixed(spec, MixedSearchStrategy.pure(SearchSequence.parse("(2,1)")))
    assert point.sequence == SearchSequence.parse("(2,1)")


def test_pure_from_mixed_enumeration():
    spec = GameSpec.build([2, "2.88", "5.12"], ["1/5"] * 3)
    cycles = [SearchSequence.parse(s) for s in ("(1,2,3)", "(2,3,1)", "(3,1,2)")]
    theta = MixedSearchStrategy(tuple(zip(cycles, EXAMPLE_WEIGHTS)))
    result = pure_from_mixed(spec, theta, depth=1)
    # only the branch opening with block 1 recurs
    assert result.alternatives == [result.sequence]
    for alt in result.alternatives:
        assert [expected_time(spec, i, alt) for i in range(3)] == result.payoffs


def test_never_periodic():
    assert never_periodic([F(1, 2), F(1, 2)], F(1, 2)) is False
    assert never_periodic([F(1, 3), F(2, 3)], F(3, 4)) is True
    sched = greedy_schedule([F(1, 3), F(2, 3)], F(3, 4), max_steps=200)
    assert not sched.periodic and sched.aperiodic


def test_search_schedule_outcomes():
    assert search_schedule([F(1, 2), F(1, 2)], F(1, 2)).status == "periodic"
    # 1 - r = 2/3 exceeds every weight: nothing is ever feasible
    assert search_schedule([F(1, 2), F(1, 2)], F(1, 3)).status == "none"
    with pytest.raises(ValidationError):
        search_schedule([0.5, 0.5], 0.5)


@st.composite
def weight_vectors(draw):
    m = draw(st.integers(1, 4))
    raw = draw(st.lists(st.integers(1, 12), min_size=m, max_size=m))
    lambdas = [F(x, sum(raw)) for x in raw]
    lo = 1 - F(1, m)
    r = draw(st.fractions(max(lo, F(1, 10)), F(19, 20), max_denominator=20))
    return lambdas, r


@settings(max_examples=60, deadline=None)
@given(weight_vectors(), st.sampled_from(["smallest", "largest", "min_denominator"]))
def test_partial_sums_stay_below_weights(data, rule):
    lambdas, r = data
    sched = greedy_schedule(lambdas, r, rule, max_steps=150)
    steps = len(sched.prefix) + len(sched.cycle or ())
    choices = sched.choices(steps)
    partial = [F(0)] * len(lambdas)
    for k, x in enumerate(choices, start=1):
        partial[x] += (1 - r) * r ** (k - 1)
        assert all(p <= lam for p, lam in zip(partial, lambdas))
        assert sum(lam - p for p, lam in zip(partial, lambdas)) == r**k
    if sched.periodic:
        assert schedule_to_weights(sched) == lambdas


@settings(max_examples=30, deadline=None)
@given(weight_vectors())
def test_float_mode_realises_weights(data):
    lambdas, r = data
    approx = greedy_schedule([float(x) for x in lambdas], float(r), max_steps=40)
    got = schedule_to_weights(approx)
    for a, b in zip(got, lambdas):
        assert abs(a - float(b)) <= approx.residual + 1e-9
