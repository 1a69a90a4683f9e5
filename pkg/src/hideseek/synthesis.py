"""Pure search sequences equivalent to mixtures of block cycles.

A block schedule x_1, x_2, ... over M blocks realises the weights
``sum_k [x_k = j] (1 - r) r^(k-1)``.  Interleaving the blocks s_{x_1},
s_{x_2}, ... gives a single sequence whose payoff against every box equals
that of the mixture choosing cycle (s_j) with the realised weight.

The greedy construction keeps, for every block, the *deficit* between the
target weight and what the schedule has realised so far.  Normalised by r^K
the deficits always sum to one, and block j may be chosen at step K+1 when its
normalised deficit is at least 1 - r.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
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
    close,
    is_exact,
    ratio,
)
from .payoff import expected_time, expected_time_mixed, schedule_enclosure

DEFAULT_MAX_STEPS = 10_000
DEFAULT_RESIDUAL = Fraction(1, 10**30)
FLOAT_SLACK = 1e-12
FLOAT_STOP = 1e-10  # float runs stop once r^K falls below this
RULES = ("smallest", "largest", "min_denominator")


class SynthesisError(RuntimeError):
    """A construction invariant failed (this indicates a bug, not bad input)."""


@dataclass(frozen=True)
class BlockSchedule:
    """Eventually periodic choice sequence ``prefix, (cycle)`` over blocks 0..M-1.

    When periodicity was not detected ``cycle`` is ``None``; ``prefix`` then
    holds the computed choices and ``residual`` = r^K is the weight still
    unassigned.  ``aperiodic`` records a proof that the schedule never
    recurs (exact mode).
    """

    prefix: tuple[int, ...]
    cycle: tuple[int, ...] | None
    weights: tuple
    ratio: Scalar
    residual: Scalar = 0
    aperiodic: bool = False

    @property
    def periodic(self) -> bool:
        return self.cycle is not None

    def choices(self, count: int) -> list[int]:
        if not self.periodic:
            if count > len(self.prefix):
                raise ValidationError("truncated schedule is shorter than requested")
            return list(self.prefix[:count])
        return SearchSequence(self.prefix, self.cycle).take(count)

    def as_sequence(self) -> SearchSequence:
        if not self.periodic:
            raise ValidationError("schedule is truncated, not periodic")
        return SearchSequence(self.prefix, self.cycle)

    def format(self) -> str:
        if self.periodic:
            return self.as_sequence().canonical().format()
        return ",".join(str(x + 1) for x in self.prefix) + ",..."


class _Deficits:
    """Deficit bookkeeping.

    Exact mode stores the normalised deficits (they stay bounded and act as
    the recurrence key).  Floating mode stores raw deficits and the scale r^K
    because renormalising amplifies rounding error by 1/r per step.
    """

    def __init__(self, lambdas: Sequence[Scalar], r: Scalar):
        self.r = r
        self.exact = all_exact(list(lambdas) + [r])
        if self.exact:
            self.values = [Fraction(x) for x in lambdas]
            self.r = Fraction(r)
        else:
            self.values = list(lambdas)
        self.scale = 1
        self.steps = 0

    def normalised(self) -> list:
        return self.values if self.exact else [v / self.scale for v in self.values]

    def key(self):
        return tuple(self.values) if self.exact else None

    def feasible(self) -> list[int]:
        need = 1 - self.r
        if self.exact:
            return [j for j, d in enumerate(self.values) if d >= need]
        bar = need * self.scale * (1 - FLOAT_SLACK)
        return [j for j, d in enumerate(self.values) if d >= bar]

    def after(self, j: int) -> list:
        if self.exact:
            return [(d - (1 - self.r) * (i == j)) / self.r for i, d in enumerate(self.values)]
        return [d - (1 - self.r) * self.scale * (i == j) for i, d in enumerate(self.values)]

    def take(self, j: int) -> None:
        self.values = self.after(j)
        if not self.exact:
            self.scale = self.scale * self.r
        self.steps += 1
        self.check()

    def check(self) -> None:
        norm = self.normalised()
        if self.exact:
            if min(norm) < 0 or sum(norm) != 1:
                raise SynthesisError(f"deficit invariant broken at step {self.steps}: {norm}")
        # rounding error grows like eps / r^K once deficits are renormalised
        elif min(norm) < -(tol := 1e-9 + 1e-13 / self.scale) or abs(sum(norm) - 1) > tol:
            raise SynthesisError(f"deficit invariant broken at step {self.steps}: {norm}")

    def copy(self) -> "_Deficits":
        other = _Deficits.__new__(_Deficits)
        other.r, other.exact, other.values = self.r, self.exact, list(self.values)
        other.scale, other.steps = self.scale, self.steps
        return other

    @property
    def residual(self):
        return self.r**self.steps if self.exact else self.scale


def _denominator(values) -> int:
    return math.lcm(*(Fraction(v).denominator for v in values))


def _pick(state: _Deficits, options: list[int], rule: str) -> int:
    if rule == "smallest":
        return options[0]
    if rule == "largest":
        return max(options, key=lambda j: (state.values[j], -j))
    if rule == "min_denominator":
        if not state.exact:
            return options[0]
        return min(options, key=lambda j: (_denominator(state.after(j)), j))
    raise ValidationError(f"unknown selection rule {rule!r}; expected one of {RULES}")


def _check_lambdas(lambdas: Sequence[Scalar], r: Scalar) -> None:
    if not lambdas:
        raise ValidationError("need at least one weight")
    if any(x < 0 for x in lambdas) or not close(sum(lambdas), 1):
        raise ValidationError("weights must be non-negative and sum to 1")
    if not 0 < r < 1:
        raise ValidationError(f"ratio r must lie in (0, 1), got {r}")


def _require_ratio(r: Scalar, m: int) -> None:
    """Refuse r < 1 - 1/M (floating data gets the usual relative tolerance)."""
    bar = 1 - ratio(1, m, r)
    if r < bar and (is_exact(r) or not close(r, bar)):
        raise ValidationError(f"r = {r} is below 1 - 1/M = {bar}")


def _never_recurs(state: _Deficits) -> bool:
    """Exact mode, r = a/b: if a prime factor of a divides a deficit
    denominator, that prime's valuation drops at every later step, so the
    deficit vector can never repeat."""
    return state.exact and math.gcd(_denominator(state.values), state.r.numerator) > 1


def never_periodic(lambdas: Sequence[Scalar], r: Scalar) -> bool:
    """True when no feasible schedule for *lambdas* can be eventually periodic
    (exact data only; see :func:`_never_recurs`)."""
    return _never_recurs(_Deficits(lambdas, r))


def _run(state: _Deficits, lambdas, rule: str, max_steps: int, forced: Sequence[int] = (),
         residual_tol=DEFAULT_RESIDUAL) -> BlockSchedule:
    seen: dict[tuple, int] = {}
    xs: list[int] = []
    aperiodic = False
    while True:
        if not aperiodic and len(xs) >= len(forced):
            aperiodic = _never_recurs(state)
        key = None if aperiodic else state.key()
        if key is not None:
            if key in seen:
                start = seen[key]
                return BlockSchedule(tuple(xs[:start]), tuple(xs[start:]), tuple(lambdas), state.r, 0)
            seen[key] = len(xs)
        done = len(xs) >= max_steps
        if aperiodic and state.residual <= residual_tol:
            done = True
        if not state.exact and state.scale < FLOAT_STOP:
            done = True
        if done:
            return BlockSchedule(tuple(xs), None, tuple(lambdas), state.r, state.residual, aperiodic)
        options = state.feasible()
        if len(xs) < len(forced):
            j = forced[len(xs)]
            if j not in options:
                raise ValidationError(f"choice {j + 1} at step {len(xs) + 1} is infeasible")
        else:
            if not options:
                raise SynthesisError(f"no feasible block at step {len(xs) + 1}")
            j = _pick(state, options, rule)
        xs.append(j)
        state.take(j)


def greedy_schedule(lambdas: Sequence[Scalar], r: Scalar, rule: str = "smallest",
                    max_steps: int = DEFAULT_MAX_STEPS, residual_tol=DEFAULT_RESIDUAL) -> BlockSchedule:
    """Block schedule whose realised weights equal *lambdas*.

    Requires ``r >= 1 - 1/M``, which guarantees a feasible block at every
    step.  Ties among feasible blocks follow *rule*: ``"smallest"`` index,
    ``"largest"`` deficit, or ``"min_denominator"`` (exact mode: keep the
    deficit denominators small, which finds a periodic schedule whenever the
    choice is forced by arithmetic).

    Stops at the first repeated deficit state (periodic schedule) or after
    *max_steps*; once recurrence is provably impossible it stops as soon as
    the unassigned weight r^K drops to *residual_tol*.
    """
    _check_lambdas(lambdas, r)
    _require_ratio(r, len(lambdas))
    return _run(_Deficits(lambdas, r), lambdas, rule, max_steps, residual_tol=residual_tol)


def feasible_choices(lambdas: Sequence[Scalar], r: Scalar, made: Sequence[int] = ()) -> list[int]:
    """Blocks that may follow the choices *made* without overshooting any weight."""
    _check_lambdas(lambdas, r)
    state = _Deficits(lambdas, r)
    for j in made:
        if j not in state.feasible():
            raise ValidationError(f"choice {j + 1} is infeasible")
        state.take(j)
    return state.feasible()


def enumerate_schedules(lambdas: Sequence[Scalar], r: Scalar, depth: int, rule: str = "smallest",
                        max_steps: int = DEFAULT_MAX_STEPS) -> list[BlockSchedule]:
    """Every schedule that branches over all feasible choices at steps
    1..*depth* and follows *rule* afterwards.

    Requires ``r**depth >= 1 - min(lambdas)``; then every block is feasible at
    each of the first *depth* steps, giving at least M**depth schedules.
    """
    _check_lambdas(lambdas, r)
    m = len(lambdas)
    _require_ratio(r, m)
    if depth < 1 or r**depth < 1 - min(lambdas):
        raise ValidationError(f"r^d = {r ** depth} is below 1 - min(lambda) = {1 - min(lambdas)}")
    out: list[BlockSchedule] = []

    def branch(state: _Deficits, made: list[int]):
        if len(made) == depth:
            out.append(_run(_Deficits(lambdas, r), lambdas, rule, max_steps, forced=made))
            return
        for j in state.feasible():
            nxt = state.copy()
            nxt.take(j)
            branch(nxt, made + [j])

    branch(_Deficits(lambdas, r), [])
    if len(out) < m**depth:
        raise SynthesisError(f"found {len(out)} schedules, fewer than M^d = {m ** depth}")
    return out


@dataclass
class ScheduleSearch:
    """Result of :func:`search_schedule`: ``status`` is ``"periodic"``,
    ``"none"`` (every branch dies: no schedule realises the weights) or
    ``"inconclusive"``."""

    status: str
    schedule: BlockSchedule | None = None
    nodes: int = 0
    deepest: int = 0


def search_schedule(lambdas: Sequence[Scalar], r: Scalar, max_depth: int = 200,
                    max_nodes: int = 100_000) -> ScheduleSearch:
    """Depth-first search over feasible choices without the ``r >= 1 - 1/M`` guarantee.

    Exact arithmetic only.  Branches are tried in ``min_denominator`` order; a
    repeated deficit state along the current path yields a periodic schedule.
    If every branch runs out of feasible blocks the weights are unrealisable.
    """
    _check_lambdas(lambdas, r)
    if not all_exact(list(lambdas) + [r]):
        raise ValidationError("schedule search needs exact weights and ratio")
    nodes = 0
    deepest = 0
    open_ended = False

    def dfs(state: _Deficits, path: list[int], on_path: dict):
        nonlocal nodes, deepest, open_ended
        nodes += 1
        deepest = max(deepest, len(path))
        key = state.key()
        if key in on_path:
            start = on_path[key]
            return BlockSchedule(tuple(path[:start]), tuple(path[start:]), tuple(lambdas), state.r, 0)
        if len(path) >= max_depth or nodes >= max_nodes:
            open_ended = True
            return None
        options = sorted(state.feasible(), key=lambda j: (_denominator(state.after(j)), j))
        on_path[key] = len(path)
        for j in options:
            nxt = state.copy()
            nxt.take(j)
            found = dfs(nxt, path + [j], on_path)
            if found is not None:
                return found
        del on_path[key]
        return None

    found = dfs(_Deficits(lambdas, r), [], {})
    if found is not None:
        return ScheduleSearch("periodic", found, nodes, deepest)
    return ScheduleSearch("inconclusive" if open_ended else "none", None, nodes, deepest)


def schedule_to_weights(schedule: BlockSchedule) -> list[Scalar]:
    """Realised weights sum_k [x_k = j] (1 - r) r^(k-1).

    Exact for a periodic schedule; for a truncated one this is the partial sum
    (short of the target by ``schedule.residual`` in total).
    """
    r = schedule.ratio
    m = max(len(schedule.weights), 1 + max(schedule.prefix + (schedule.cycle or ())))
    out: list[Scalar] = [0] * m
    power = 1
    for x in schedule.prefix:
        out[x] += (1 - r) * power
        power *= r
    if schedule.periodic:
        cycle_factor = 1 / (1 - r ** len(schedule.cycle))
        for x in schedule.cycle:
            out[x] += (1 - r) * power * cycle_factor
            power *= r
    return out


def interleave(blocks: Sequence[Sequence[int]], schedule: BlockSchedule) -> SearchSequence | list[int]:
    """The sequence s_{x_1}, s_{x_2}, ...; a plain list of boxes when truncated."""
    head = [b for x in schedule.prefix for b in blocks[x]]
    if not schedule.periodic:
        return head
    return SearchSequence(tuple(head), tuple(b for x in schedule.cycle for b in blocks[x]))


@dataclass
class SynthesisResult:
    """A pure strategy equivalent to a mixture of block cycles.

    ``sequence`` is the eventually periodic witness, or ``None`` when the
    schedule never recurred.  In that case ``prefix`` holds the first blocks
    and ``enclosures[i]`` brackets the payoff of *every* continuation of the
    prefix by the blocks, which must contain ``payoffs[i]``.
    """

    sequence: SearchSequence | None
    schedule: BlockSchedule
    blocks: list[tuple[int, ...]]
    payoffs: list
    prefix: tuple[int, ...]
    enclosures: list[tuple] | None = None
    alternatives: list[SearchSequence] = field(default_factory=list)

    @property
    def exact_witness(self) -> bool:
        return self.sequence is not None

    def max_gap(self):
        """Largest enclosure width (zero for an exact witness)."""
        if self.enclosures is None:
            return 0
        return max(hi - lo for lo, hi in self.enclosures)


def block_form(spec: GameSpec, theta: MixedSearchStrategy) -> list[tuple[int, ...]]:
    """Return the blocks s_j of a mixture over pure cycles (s_j), checking the
    k_i multiset condition."""
    spec.require_root()
    ks = list(spec.root_exponents)
    blocks = []
    for seq in theta.sequences:
        c = seq.canonical()
        if c.prefix or [c.cycle.count(i) for i in range(spec.n)] != ks:
            raise ValidationError(f"support sequence {seq} is not a pure cycle of block form k={tuple(ks)}")
        blocks.append(c.cycle)
    return blocks


def pure_from_mixed(spec: GameSpec, theta: MixedSearchStrategy, rule: str = "smallest",
                    depth: int | None = None, max_steps: int = DEFAULT_MAX_STEPS) -> SynthesisResult:
    """Build xi* = s_{x_1}, s_{x_2}, ... with u(i, xi*) = u(i, theta) for all boxes.

    The schedule comes from :func:`greedy_schedule` on theta's weights with
    ratio r = common root.  The result is checked against the payoff module
    before it is returned; a mismatch raises :class:`SynthesisError`.  With
    *depth* the alternatives from :func:`enumerate_schedules` are attached.
    """
    blocks = block_form(spec, theta)
    r = spec.common_root
    lambdas = theta.weights
    _require_ratio(r, len(blocks))
    schedule = greedy_schedule(lambdas, r, rule, max_steps)
    targets = [expected_time_mixed(spec, HiderStrategy.point(spec.n, i), theta) for i in range(spec.n)]
    built = interleave(blocks, schedule)
    result = SynthesisResult(None, schedule, blocks, targets, ())
    if schedule.periodic:
        result.sequence = built.canonical()
        result.prefix = tuple(built.prefix)
        for i, target in enumerate(targets):
            got = expected_time(spec, i, built)
            if not close(got, target, 1e-9):
                raise SynthesisError(f"box {i + 1}: synthesised payoff {got} != mixture payoff {target}")
    else:
        result.prefix = tuple(built)
        result.enclosures = [schedule_enclosure(spec, i, blocks, schedule.prefix) for i in range(spec.n)]
        for (lo, hi), target in zip(result.enclosures, targets):
            if not lo - 1e-9 * abs(lo) <= target <= hi + 1e-9 * abs(hi):
                raise SynthesisError(f"mixture payoff {target} escapes the enclosure [{lo}, {hi}]")
    if depth is not None:
        for alt in enumerate_schedules(lambdas, r, depth, rule, max_steps):
            if alt.periodic:
                result.alternatives.append(interleave(blocks, alt).canonical())
    return result
