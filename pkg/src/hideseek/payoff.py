"""Expected search times.

For a hider in box i and sequence xi, the detection time is the elapsed time
at the l-th search of box i with probability r_i^(l-1) q_i.  For an
eventually periodic sequence the sum splits into a finite part (prefix
occurrences) and a doubly geometric part (cycle occurrences), both summed in
closed form here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .core import (
    GameSpec,
    HiderStrategy,
    MixedSearchStrategy,
    Scalar,
    SearchSequence,
    ValidationError,
    all_exact,
)

INFINITE = math.inf


def is_infinite(x) -> bool:
    try:
        return math.isinf(x)
    except (TypeError, OverflowError):
        return False


@dataclass(frozen=True)
class PrefixTimes:
    """Cumulative elapsed times T_i^l at the first ``len(times)`` searches of ``box``."""

    box: int
    times: tuple


@dataclass(frozen=True)
class CycleBlock:
    order: tuple[int, ...]
    block_weights: tuple
    duration: Scalar


def prefix_times(spec: GameSpec, box: int, seq: SearchSequence, count: int) -> PrefixTimes:
    """Elapsed times up to and including each of the first *count* searches of *box*."""
    if box not in seq.cycle and seq.prefix.count(box) < count:
        raise ValidationError(f"box {box + 1} is searched fewer than {count} times")
    t = spec.times
    out = []
    elapsed = 0
    pos = 0
    while len(out) < count:
        b = seq[pos]
        elapsed += t[b]
        if b == box:
            out.append(elapsed)
        pos += 1
    return PrefixTimes(box, tuple(out))


def _tail_sum(spec: GameSpec, box: int, start_time, start_count: int, cycle: Sequence[int]):
    """Contribution of repeating *cycle* forever, starting after *start_count*
    searches of *box* at elapsed time *start_time*."""
    t = spec.times
    q = spec.detection[box]
    r = spec.overlook[box]
    offsets = []
    elapsed = 0
    for b in cycle:
        elapsed += t[b]
        if b == box:
            offsets.append(elapsed)
    c = len(offsets)
    if c == 0:
        return None
    period = elapsed
    rho = r**c
    # sum_m rho^m = 1/(1-rho);  sum_m m rho^m = rho/(1-rho)^2
    geo = 1 / (1 - rho)
    geo_m = rho / (1 - rho) ** 2
    total = 0
    for j, tau in enumerate(offsets):
        total += r**j * ((start_time + tau) * geo + period * geo_m)
    return q * r**start_count * total


def expected_time(spec: GameSpec, box: int, seq: SearchSequence) -> Scalar:
    """u(i, xi): expected time to find a hider in *box* when searching along *seq*.

    Returns :data:`INFINITE` when the box is missing from the cycle (and the
    hider can escape detection with positive probability).
    """
    seq.check_boxes(spec.n)
    t = spec.times
    q = spec.detection[box]
    r = spec.overlook[box]
    total = 0
    elapsed = 0
    count = 0
    for b in seq.prefix:
        elapsed += t[b]
        if b == box:
            total += r**count * q * elapsed
            count += 1
    if r == 0 and count > 0:
        return total
    tail = _tail_sum(spec, box, elapsed, count, seq.cycle)
    if tail is None:
        return INFINITE
    return total + tail


def payoff_vector(spec: GameSpec, seq: SearchSequence) -> list:
    return [expected_time(spec, i, seq) for i in range(spec.n)]


def expected_time_mixed(spec: GameSpec, hider: HiderStrategy, theta: MixedSearchStrategy) -> Scalar:
    """u(p, theta) = sum_i sum_j p_i theta_j u(i, xi_j)."""
    if len(hider) != spec.n:
        raise ValidationError("hider strategy length does not match the game")
    total = 0
    for seq, w in theta.support:
        for i, p in enumerate(hider.probs):
            if p == 0 or w == 0:
                continue
            u = expected_time(spec, i, seq)
            if is_infinite(u):
                return INFINITE
            total += p * w * u
    return total


def partial_series(spec: GameSpec, box: int, seq: SearchSequence, searches: int):
    """Oracle: the first *searches* terms of the defining series, walking the
    sequence one search at a time.

    Returns ``(partial_sum, tail_bound)``; the tail bound caps the omitted
    terms (``INFINITE`` when the box leaves the sequence).
    """
    t = spec.times
    q = spec.detection[box]
    r = spec.overlook[box]
    if box not in seq.cycle:
        searches = min(searches, seq.prefix.count(box))
    total = 0
    elapsed = 0
    count = 0
    pos = 0
    while count < searches:
        b = seq[pos]
        elapsed += t[b]
        if b == box:
            total += r**count * q * elapsed
            count += 1
        pos += 1
    if box not in seq.cycle:
        return total, (0 if r**count == 0 else INFINITE)
    # later searches of the box come at most one cycle pass apart, starting no
    # later than one pass after max(elapsed, end of prefix)
    period = sum(t[b] for b in seq.cycle)
    start = max(elapsed, sum(t[b] for b in seq.prefix))
    return total, r**count * (start + period / q)


def block_weights(spec: GameSpec, order: Sequence[int]) -> CycleBlock:
    """Per-box block weights w_i(s) = sum_{l<=k_i} r_i^(l-1) q_i T_i^l(s) of a block."""
    spec.require_root()
    order = tuple(order)
    ks = spec.root_exponents
    counts = [order.count(i) for i in range(spec.n)]
    if counts != list(ks):
        raise ValidationError(f"block {[b + 1 for b in order]} does not contain box i exactly k_i={ks} times")
    t = spec.times
    weights = [0] * spec.n
    seen = [0] * spec.n
    elapsed = 0
    for b in order:
        elapsed += t[b]
        weights[b] += spec.overlook[b] ** seen[b] * spec.detection[b] * elapsed
        seen[b] += 1
    return CycleBlock(order, tuple(weights), elapsed)


def periodic_payoff_identity(spec: GameSpec, box: int, block: Sequence[int]) -> Scalar:
    """u(i, (s)) from the block weight: T r/(1-r) + w_i(s)/(1-r)."""
    cb = block_weights(spec, block)
    r = spec.common_root
    return (cb.duration * r + cb.block_weights[box]) / (1 - r)


def continuation_value(acc, survival, elapsed, tail_value):
    """Payoff of ``prefix + continuation`` given the prefix summary.

    *acc* is the prefix's partial sum, *survival* the probability the hider
    survived the prefix and *tail_value* the payoff of the continuation on its
    own clock.
    """
    return acc + survival * (elapsed + tail_value)


def prefix_summary(spec: GameSpec, prefix: Sequence[int]):
    """Per-box ``(acc_i, survival_i)`` and the elapsed time after a finite prefix."""
    t = spec.times
    acc = [0] * spec.n
    surv = [1] * spec.n
    elapsed = 0
    for b in prefix:
        elapsed += t[b]
        acc[b] += surv[b] * spec.detection[b] * elapsed
        surv[b] = surv[b] * spec.overlook[b]
    return acc, surv, elapsed


def _geometric_horner(values: Sequence, r):
    """sum_k values[k] r^k, with integer arithmetic when everything is rational."""
    if all_exact(list(values) + [r]) and values:
        r = Fraction(r)
        fr = [Fraction(v) for v in values]
        den = math.lcm(*(v.denominator for v in fr))
        a, b = r.numerator, r.denominator
        total, power = 0, 1
        for v in fr:  # total_K = sum_k v_k a^k b^(K-1-k)
            total = total * b + v.numerator * (den // v.denominator) * power
            power *= a
        return Fraction(total, den * b ** (len(fr) - 1))
    total = 0
    for v in reversed(values):
        total = v + r * total
    return total


def schedule_enclosure(spec: GameSpec, box: int, blocks: Sequence[Sequence[int]], choices: Sequence[int],
                       lead: Sequence[int] = ()):
    """Interval containing u(box, lead + s_{x_1} ... s_{x_K} + any continuation by *blocks*).

    Uses the cycle decomposition u = T r/(1-r) + sum_k w(s_{x_k}) r^(k-1): the
    first K terms are summed exactly and the rest lie between
    r^K min_j w(s_j)/(1-r) and r^K max_j w(s_j)/(1-r).
    """
    r = spec.common_root
    weights = [block_weights(spec, b) for b in blocks]
    duration = weights[0].duration
    w = [cb.block_weights[box] for cb in weights]
    head = duration * r / (1 - r) + _geometric_horner([w[x] for x in choices], r)
    scale = r ** len(choices) / (1 - r)
    lo, hi = head + scale * min(w), head + scale * max(w)
    if not lead:
        return lo, hi
    acc, surv, elapsed = prefix_summary(spec, lead)
    return (continuation_value(acc[box], surv[box], elapsed, lo),
            continuation_value(acc[box], surv[box], elapsed, hi))


def payoff_enclosure(spec: GameSpec, box: int, prefix: Sequence[int], blocks: Sequence[Sequence[int]]):
    """Interval containing u(box, prefix + any concatenation of *blocks*).

    The blocks must satisfy the k_i multiset condition.  Every continuation
    built from them has payoff between the smallest
    and largest payoff of the pure block cycles, so the enclosure is the exact
    prefix contribution plus that range scaled by the survival probability.
    """
    for b in blocks:
        block_weights(spec, b)
    acc, surv, elapsed = prefix_summary(spec, prefix)
    values = [expected_time(spec, box, SearchSequence.periodic(b)) for b in blocks]
    lo = continuation_value(acc[box], surv[box], elapsed, min(values))
    hi = continuation_value(acc[box], surv[box], elapsed, max(values))
    return lo, hi
