from __future__ import annotations

from fractions import Fraction as F

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hideseek.core import (
    GameSpec,
    HiderStrategy,
    MixedSearchStrategy,
    SearchSequence,
    ValidationError,
    canonicalize,
    close,
    convert,
    exact_root,
    parse_scalar,
    ratio,
    root,
)

words = st.lists(st.integers(0, 3), min_size=0, max_size=6)
cycles = st.lists(st.integers(0, 3), min_size=1, max_size=6)


@pytest.mark.parametrize(
    "text, expected",
    [
        ("1,2,2,3,(3)", "1,2,2,(3)"),
        ("(1,2,1,2)", "(1,2)"),
        ("1,2,(1,2)", "(1,2)"),
        ("2,(1,2)", "(2,1)"),
        ("1,2,3,(1,2,3)", "(1,2,3)"),
        ("1,(2,1)", "(1,2)"),
    ],
)
def test_canonical_examples(text, expected):
    assert SearchSequence.parse(text).canonical().format() == expected
    assert SearchSequence.parse(text) == SearchSequence.parse(expected)


@given(words, cycles)
def test_canonicalize_idempotent_and_same_stream(prefix, cycle):
    seq = SearchSequence(tuple(prefix), tuple(cycle))
    c = canonicalize(seq)
    assert canonicalize(c).prefix == c.prefix and canonicalize(c).cycle == c.cycle
    assert len(c.prefix) <= len(seq.prefix) and len(c.cycle) <= len(seq.cycle)
    horizon = len(prefix) + 3 * len(cycle)
    assert seq.take(horizon) == c.take(horizon)
    assert hash(seq) == hash(c)


@given(words, cycles)
def test_parse_format_round_trip(prefix, cycle):
    seq = SearchSequence(tuple(prefix), tuple(cycle))
    again = SearchSequence.parse(seq.format())
    assert again.prefix == seq.prefix and again.cycle == seq.cycle


@pytest.mark.parametrize("text", ["1,2", "(1)(2)", "1(2)", "0,(1)", "(a)", "()"])
def test_parse_rejects(text):
    with pytest.raises(ValidationError):
        SearchSequence.parse(text)


def test_parse_scalar_forms():
    assert parse_scalar("3/4") == F(3, 4)
    assert parse_scalar("0.25") == F(1, 4)
    assert parse_scalar(2) == F(2)
    assert isinstance(parse_scalar("~0.3"), float)
    assert isinstance(parse_scalar("1/3", "double"), float)
    assert isinstance(parse_scalar("1/3", "quad"), mpmath.mpf)


def test_ratio_matches_kind():
    assert ratio(1, 3, F(1, 2)) == F(1, 3)
    assert isinstance(ratio(1, 3, 0.5), float)
    assert isinstance(ratio(1, 3, convert(F(1, 2), "quad")), mpmath.mpf)


def test_exact_root():
    assert exact_root(F(8, 27), 3) == F(2, 3)
    assert exact_root(F(2), 2) is None
    assert root(F(1, 4), 2) == F(1, 2)
    assert close(root(F(1, 2), 2), 2**-0.5)


def test_auto_root_structure():
    spec = GameSpec.build([1, 2, 3], ["1/5"] * 3)
    assert spec.root_exponents == (1, 1, 1) and spec.common_root == F(4, 5)
    assert not GameSpec.build([1, 1], ["1/2", "1/3"]).has_root


def test_from_root_rational_and_irrational():
    spec = GameSpec.from_root([1, 1], F(1, 4), [1, 2])
    assert spec.detection == (F(3, 4), F(1, 2)) and spec.exact
    quad = GameSpec.from_root([1, 1], F(1, 2), [1, 2], mode="quad")
    assert isinstance(quad.detection[1], mpmath.mpf)
    assert close(quad.overlook[1] ** 2, F(1, 2))


@pytest.mark.parametrize(
    "times, probs, k, r",
    [
        ([1, 2], ["1/2"], None, None),
        ([0, 1], ["1/2", "1/2"], None, None),
        ([1, 1], ["0", "1/2"], None, None),
        ([1, 1], ["3/2", "1/2"], None, None),
        ([1, 1], ["1/2", "3/4"], [2, 4], "1/4"),
        ([1, 1], ["1/2", "3/4"], [1, 1], "1/2"),
    ],
)
def test_spec_validation(times, probs, k, r):
    with pytest.raises(ValidationError):
        GameSpec.build(times, probs, k, r)


def test_distributions_validated():
    with pytest.raises(ValidationError):
        HiderStrategy((F(1, 2), F(1, 3)))
    with pytest.raises(ValidationError):
        HiderStrategy((F(3, 2), F(-1, 2)))
    a = SearchSequence.parse("(1,2)")
    with pytest.raises(ValidationError):
        MixedSearchStrategy(((a, F(1, 2)), (SearchSequence.parse("1,(2,1)"), F(1, 2))))
    merged = MixedSearchStrategy.from_pairs([(a, F(1, 4)), (SearchSequence.parse("1,2,(1,2)"), F(3, 4))])
    assert merged.weights == [F(1)]
