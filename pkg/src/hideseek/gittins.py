"""Gittins indices and best-response search sequences."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath

from .core import (
    GameSpec,
    HiderStrategy,
    SearchSequence,
    ValidationError,
    is_exact,
)

FLOAT_TIE_TOLERANCE = 1e-12
DEFAULT_PERMUTATION_CAP = 8


@dataclass(frozen=True)
class SearchState:
    counts: tuple[int, ...]
    hider_prior: HiderStrategy

    def __post_init__(self):
        object.__setattr__(self, "counts", tuple(self.counts))
        if any(m < 0 for m in self.counts):
            raise ValidationError("search counts must be non-negative")


@dataclass(frozen=True)
class TieBreakRule:
    """Ties go to the box that appears first in ``order``."""

    order: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "order", tuple(self.order))
        if sorted(self.order) != list(range(len(self.order))):
            raise ValidationError(f"{self.order} is not a permutation")

    @classmethod
    def identity(cls, n: int) -> "TieBreakRule":
        return cls(tuple(range(n)))

    def rank(self, box: int) -> int:
        return self.order.index(box)


@dataclass
class GittinsRun:
    """Outcome of :func:`best_response`.

    ``sequence`` is set when the index state recurred (the tail is provably
    periodic); otherwise only ``prefix`` (``horizon`` searches) is known.
    ``near_ties`` counts floating comparisons decided within tolerance.
    """

    prefix: tuple[int, ...]
    sequence: SearchSequence | None
    near_ties: int = 0

    @property
    def periodic(self) -> bool:
        return self.sequence is not None


def _ratio(spec: GameSpec, prior: HiderStrategy, i: int):
    return prior[i] * spec.detection[i] / spec.times[i]


def index(spec: GameSpec, state: SearchState, i: int):
    """psi_i = p_i q_i r_i^m_i / t_i."""
    return _ratio(spec, state.hider_prior, i) * spec.overlook[i] ** state.counts[i]


def _log(x):
    return mpmath.log(x) if isinstance(x, mpmath.mpf) else math.log(x)


def _compare(spec: GameSpec, prior: HiderStrategy, counts, i: int, j: int) -> tuple[int, bool]:
    """Sign of psi_i - psi_j and whether a floating comparison was a near tie."""
    if i == j:
        return 0, False
    a_i, a_j = _ratio(spec, prior, i), _ratio(spec, prior, j)
    r_i, r_j = spec.overlook[i], spec.overlook[j]
    m_i, m_j = counts[i], counts[j]
    zero_i = a_i == 0 or (r_i == 0 and m_i > 0)
    zero_j = a_j == 0 or (r_j == 0 and m_j > 0)
    if zero_i or zero_j:
        return (zero_j - zero_i), False
    if is_exact(a_i) and is_exact(a_j) and is_exact(r_i) and is_exact(r_j):
        lhs, rhs = a_i * r_i**m_i, a_j * r_j**m_j
        return (lhs > rhs) - (lhs < rhs), False
    if spec.has_root:
        k_i, k_j = spec.root_exponents[i], spec.root_exponents[j]
        r = spec.common_root
        if is_exact(a_i) and is_exact(a_j) and is_exact(r):
            # raise both sides to L = lcm(k_i, k_j) so every power is integral
            big = math.lcm(k_i, k_j)
            lhs = a_i**big * r ** (m_i * big // k_i)
            rhs = a_j**big * r ** (m_j * big // k_j)
            return (lhs > rhs) - (lhs < rhs), False
        expo = Fraction(m_i, k_i) - Fraction(m_j, k_j)
        diff = _log(a_i) - _log(a_j) + expo.numerator * _log(r) / expo.denominator
    else:
        diff = _log(a_i) - _log(a_j) + m_i * _log(r_i) - m_j * _log(r_j)
    scale = max(1.0, abs(float(_log(a_i))), abs(float(_log(a_j))))
    if abs(diff) <= FLOAT_TIE_TOLERANCE * scale:
        return 0, diff != 0
    return (1 if diff > 0 else -1), False


def compare_indices(spec: GameSpec, state: SearchState, i: int, j: int) -> int:
    """-1, 0 or 1 as psi_i is less than, equal to or greater than psi_j."""
    return _compare(spec, state.hider_prior, state.counts, i, j)[0]


def _choose(spec, prior, counts, rule: TieBreakRule, active) -> tuple[int, int]:
    best = None
    near = 0
    for box in rule.order:
        if box not in active:
            continue
        if best is None:
            best = box
            continue
        sign, was_near = _compare(spec, prior, counts, box, best)
        near += was_near
        if sign > 0:
            best = box
    return best, near


def _state_key(spec: GameSpec, counts, active) -> tuple | None:
    """Counts with whole rounds (k_i searches of every active box) removed.

    Index ratios are invariant under such rounds, so a repeated key proves the
    remaining sequence repeats.
    """
    if not spec.has_root:
        return None
    ks = spec.root_exponents
    rounds = min(counts[i] // ks[i] for i in active)
    return tuple(counts[i] - rounds * ks[i] if i in active else 0 for i in range(spec.n))


def best_response(spec: GameSpec, hider: HiderStrategy, rule: TieBreakRule | None = None,
                  horizon: int | None = None) -> GittinsRun:
    """The consistent Gittins sequence against *hider* under *rule*.

    Searches the box with largest index p_i q_i r_i^m_i / t_i, breaking ties
    by *rule*.  Stops as soon as the normalised count state repeats and then
    returns the eventually periodic sequence; otherwise returns the first
    *horizon* searches (default ``10 * sum(k_i)``).
    """
    n = spec.n
    rule = rule or TieBreakRule.identity(n)
    if len(rule.order) != n or len(hider) != n:
        raise ValidationError("tie-break rule / hider strategy size does not match the game")
    if horizon is None:
        horizon = 10 * (sum(spec.root_exponents) if spec.has_root else n)
    if horizon < 1:
        raise ValidationError("horizon must be at least 1")
    active = {i for i in range(n) if hider[i] > 0}
    if not active:
        raise ValidationError("hider strategy has no positive entry")
    periodic_ok = all(spec.overlook[i] > 0 for i in active)
    counts = [0] * n
    seen: dict[tuple, int] = {}
    out: list[int] = []
    near = 0
    while True:
        key = _state_key(spec, counts, active) if periodic_ok else None
        if key is not None:
            if key in seen:
                start = seen[key]
                seq = SearchSequence(tuple(out[:start]), tuple(out[start:]))
                return GittinsRun(tuple(out), seq.canonical(), near)
            seen[key] = len(out)
        if len(out) >= horizon:
            return GittinsRun(tuple(out), None, near)
        box, was_near = _choose(spec, hider, counts, rule, active)
        near += was_near
        out.append(box)
        counts[box] += 1


def bayes_sequence(spec: GameSpec, hider: HiderStrategy, rule: TieBreakRule | None, length: int) -> list[int]:
    """Reference generator: Bayes-update the hiding distribution after each
    unsuccessful search and pick the largest p_i q_i / t_i."""
    n = spec.n
    rule = rule or TieBreakRule.identity(n)
    post = list(hider.probs)
    out = []
    for _ in range(length):
        best = None
        for box in rule.order:
            score = post[box] * spec.detection[box] / spec.times[box]
            if best is None or score > best[0]:
                best = (score, box)
        box = best[1]
        out.append(box)
        miss = 1 - post[box] * spec.detection[box]
        post = [p / miss for p in post]
        post[box] = post[box] * spec.overlook[box]
    return out


def equalizing_strategy(spec: GameSpec) -> HiderStrategy:
    """p*_i proportional to t_i / q_i."""
    ratios = [t / q for t, q in zip(spec.times, spec.detection)]
    total = sum(ratios)
    return HiderStrategy(tuple(x / total for x in ratios))


def consistent_sequences(spec: GameSpec, cap: int = DEFAULT_PERMUTATION_CAP) -> list[tuple[TieBreakRule, SearchSequence]]:
    """All distinct consistent Gittins sequences against the equalizing strategy.

    Each is a pure cycle ``(s)`` whose block ``s`` holds box i exactly k_i
    times.  Returned in the lexicographic order of the first permutation
    producing each one.
    """
    spec.require_root()
    if spec.n > cap:
        raise ValidationError(f"{spec.n}! tie-break permutations exceed the cap n <= {cap}")
    hider = equalizing_strategy(spec)
    out: list[tuple[TieBreakRule, SearchSequence]] = []
    seen = set()
    for perm in itertools.permutations(range(spec.n)):
        rule = TieBreakRule(perm)
        run = best_response(spec, hider, rule)
        if run.sequence is None:
            raise ValidationError("consistent sequence did not become periodic")
        seq = run.sequence
        if seq.prefix or [seq.cycle.count(i) for i in range(spec.n)] != list(spec.root_exponents):
            raise ValidationError(f"consistent sequence {seq} is not a single block cycle")
        if seq not in seen:
            seen.add(seq)
            out.append((rule, seq))
    return out
