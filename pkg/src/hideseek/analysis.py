"""Game values for the solved classes, the restricted matrix game, the
thresholds q*, r* and lambda*, and existence certificates for optimal pure
Searcher strategies."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import mpmath

from .core import (
    QUAD_BITS,
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
from .gittins import consistent_sequences, equalizing_strategy
from .lp import linprog, solve_matrix_game
from .payoff import (
    block_weights,
    expected_time,
    expected_time_mixed,
    is_infinite,
    schedule_enclosure,
)
from .synthesis import (
    BlockSchedule,
    SynthesisError,
    SynthesisResult,
    greedy_schedule,
    interleave,
    never_periodic,
    search_schedule,
)

FLOAT_LP_EPS = 1e-12
MATRIX_CAP = 5040
R_STAR_KS = range(1, 13)
R_STAR_TOL = 1e-12
WALK_CAP = 10_000


@dataclass
class GameValueReport:
    value: Scalar
    hider_optimal: HiderStrategy
    searcher_optimal: MixedSearchStrategy
    provenance: str


@dataclass
class ExistenceCertificate:
    """Verdict on whether an optimal pure Searcher strategy exists.

    ``witness`` is an eventually periodic optimal pure strategy.  When the
    synthesis schedule provably never recurs there is no such finite
    description; ``synthesis`` then carries a truncated prefix whose payoff
    enclosures contain the value.
    """

    verdict: str  # "exists" | "not_exists" | "unknown"
    rule: str
    witness: SearchSequence | None = None
    value: Scalar | None = None
    bound_values: dict = field(default_factory=dict)
    synthesis: SynthesisResult | None = None
    notes: list[str] = field(default_factory=list)

    def witness_gap(self, spec: GameSpec):
        """max_i |u(i, witness) - V| (zero for a verified exact witness), or
        the enclosure width for a truncated witness."""
        if self.witness is not None:
            return max(abs(expected_time(spec, i, self.witness) - self.value) for i in range(spec.n))
        if self.synthesis is not None and self.synthesis.enclosures:
            return self.synthesis.max_gap()
        return None


def _pairwise_sum(times: Sequence[Scalar]) -> Scalar:
    total = 0
    for a in range(len(times)):
        for b in range(a + 1, len(times)):
            total += times[a] * times[b]
    return total


def _cyclic_mixture(spec: GameSpec) -> MixedSearchStrategy:
    """Start at box i with probability t_i/T, then visit the rest in cyclic order."""
    n = spec.n
    total = sum(spec.times)
    pairs = []
    for i in range(n):
        order = tuple((i + j) % n for j in range(n))
        pairs.append((SearchSequence.periodic(order), spec.times[i] / total))
    return MixedSearchStrategy.from_pairs(pairs)


def value_q1(spec: GameSpec) -> GameValueReport:
    """Value when every detection probability is one."""
    if any(q != 1 for q in spec.detection):
        raise ValidationError("value_q1 needs q_i = 1 for every box")
    t = spec.times
    total = sum(t)
    value = total - _pairwise_sum(t) / total
    hider = HiderStrategy(tuple(x / total for x in t))
    return GameValueReport(value, hider, _cyclic_mixture(spec), "all-detect: cyclic orders weighted by t_i/T")


def value_equal_q(spec: GameSpec) -> GameValueReport:
    """Value when all boxes share one detection probability q."""
    if not spec.equal_detection():
        raise ValidationError("value_equal_q needs equal detection probabilities")
    q = spec.detection[0]
    t = spec.times
    total = sum(t)
    value = total / q - _pairwise_sum(t) / total
    hider = HiderStrategy(tuple(x / total for x in t))
    return GameValueReport(value, hider, _cyclic_mixture(spec), "equal-q: repeated cyclic orders weighted by t_i/T")


def equal_times_mixture(spec: GameSpec) -> MixedSearchStrategy:
    """For equal search times: (1, ..., n) and (n, ..., 1) repeated, each with weight 1/2."""
    n = spec.n
    if any(t != spec.times[0] for t in spec.times):
        raise ValidationError("needs equal search times")
    forward = SearchSequence.periodic(tuple(range(n)))
    return MixedSearchStrategy.from_pairs([(forward, Fraction(1, 2)),
                                           (SearchSequence.periodic(tuple(reversed(range(n)))), Fraction(1, 2))])


def payoff_matrix(spec: GameSpec, sequences: Sequence[SearchSequence], boxes: Sequence[int] | None = None):
    boxes = list(range(spec.n)) if boxes is None else list(boxes)
    matrix = [[expected_time(spec, i, s) for s in sequences] for i in boxes]
    if any(is_infinite(x) for row in matrix for x in row):
        raise ValidationError("some support sequence never searches a box in the hider support")
    return matrix


def restricted_game_solve(spec: GameSpec, searcher_support: Sequence[SearchSequence],
                          hider_support: Sequence[int] | None = None) -> GameValueReport:
    """Solve the finite game: the Hider picks a box in *hider_support*, the
    Searcher one of *searcher_support*.  Exact LP when the data is rational."""
    seqs = list(dict.fromkeys(s.canonical() for s in searcher_support))
    boxes = list(range(spec.n)) if hider_support is None else sorted(set(hider_support))
    if not seqs or not boxes:
        raise ValidationError("empty strategy set")
    if len(seqs) > MATRIX_CAP or len(boxes) > 8:
        raise ValidationError(f"matrix {len(boxes)}x{len(seqs)} exceeds the size cap")
    matrix = payoff_matrix(spec, seqs, boxes)
    exact = all_exact(x for row in matrix for x in row)
    value, rows, cols = solve_matrix_game(matrix, eps=0 if exact else FLOAT_LP_EPS)
    probs = [Fraction(0) if exact else 0.0] * spec.n
    for b, p in zip(boxes, rows):
        probs[b] = p
    theta = MixedSearchStrategy.from_pairs([(s, w) for s, w in zip(seqs, cols) if w > 0])
    return GameValueReport(value, HiderStrategy(tuple(probs)), theta, "restricted matrix game (simplex)")


def lambda_star(spec: GameSpec, cycles: Sequence[SearchSequence] | None = None, value: Scalar | None = None):
    """Largest single-sequence weight in an optimal mixture over *cycles*.

    Defaults: the consistent Gittins cycles against p*, and V = u(p*, cycle).
    Returns ``(lambda_star, theta)`` with theta attaining it.
    """
    if cycles is None:
        cycles = [s for _, s in consistent_sequences(spec)]
    cycles = list(dict.fromkeys(c.canonical() for c in cycles))
    if value is None:
        value = expected_time_mixed(spec, equalizing_strategy(spec), MixedSearchStrategy.pure(cycles[0]))
    matrix = payoff_matrix(spec, cycles)
    exact = all_exact([value] + [x for row in matrix for x in row])
    eps = 0 if exact else FLOAT_LP_EPS
    m = len(cycles)
    best = None
    for j in range(m):
        c = [int(col == j) for col in range(m)]
        res = linprog(c, A_ub=matrix, b_ub=[value] * spec.n, A_eq=[[1] * m], b_eq=[1], eps=eps)
        if res.status != "optimal":
            raise ValidationError(f"no mixture over the cycles keeps every payoff at or below V = {value}")
        if best is None or res.fun > best[0]:
            best = (res.fun, res.x)
    weight, x = best
    theta = MixedSearchStrategy.from_pairs([(s, w) for s, w in zip(cycles, x) if w > 0])
    return weight, theta


def q_star(spec: GameSpec) -> Scalar:
    """Detection threshold above which no optimal pure strategy exists (equal q)."""
    if not spec.equal_detection():
        raise ValidationError("q_star needs equal detection probabilities")
    return q_star_for_times(spec.times)


def q_star_for_times(times: Sequence[Scalar]) -> Scalar:
    if len(times) == 1:
        return Fraction(1)
    times = [Fraction(t) if isinstance(t, int) else t for t in times]
    total = sum(times)
    return 1 - _pairwise_sum(times) / (total * (total - min(times)))


def no_pure_interval(spec: GameSpec):
    """Two boxes, equal q: the open interval of q with no optimal pure strategy,
    or ``None`` when t_1/(t_1+t_2) >= 1/4 (boxes ordered so t_1 <= t_2)."""
    if spec.n != 2 or not spec.equal_detection():
        raise ValidationError("no_pure_interval needs two boxes with equal detection probabilities")
    t1, t2 = sorted(spec.times)
    share = t1 / (t1 + t2)
    if share >= ratio(1, 4, share):
        return None
    share = mpmath.mpf(share.numerator) / share.denominator if is_exact(share) else mpmath.mpf(share)
    return float(1 - mpmath.sqrt(share)), float((1 + mpmath.sqrt(1 - 4 * share)) / 2)


def in_no_pure_interval(spec: GameSpec) -> bool:
    """Exact membership test for :func:`no_pure_interval` (squares instead of roots)."""
    t1, t2 = sorted(spec.times)
    share = t1 / (t1 + t2)
    if share >= ratio(1, 4, share):
        return False
    q = spec.detection[0]
    above_lo = share > (1 - q) ** 2  # 1 - sqrt(share) < q
    below_hi = 2 * q - 1 < 0 or (2 * q - 1) ** 2 < 1 - 4 * share  # q < (1 + sqrt(1 - 4 share))/2
    return above_lo and below_hi


# -- two boxes with common root ------------------------------------------------------


def _bezout(a: int, b: int) -> tuple[int, int]:
    """x, y with a x + b y = 1 for coprime a, b."""
    old_r, r = a, b
    old_x, x = 1, 0
    old_y, y = 0, 1
    while r:
        quo = old_r // r
        old_r, r = r, old_r - quo * r
        old_x, x = x, old_x - quo * x
        old_y, y = y, old_y - quo * y
    return old_x, old_y


def _walk(k1: int, k2: int, offset: int, tie_box: int, cap: int = WALK_CAP) -> tuple[list[int], SearchSequence]:
    """Gittins sequence for two boxes as a walk on the integer offset.

    The index ratio psi_1/psi_2 equals r^(offset/(k1 k2)): box 1 is searched
    while the offset is negative (raising it by k2), box 2 while positive
    (lowering it by k1); at zero *tie_box* is searched.  Returns the searches
    made before the offset first reaches zero, and the whole sequence.
    """
    seen: dict[int, int] = {}
    out: list[int] = []
    lead = None
    e = offset
    while e not in seen:
        if len(out) > cap:
            raise ValidationError("Gittins walk did not become periodic within the step cap")
        seen[e] = len(out)
        if e == 0 and lead is None:
            lead = list(out)
        box = 0 if e < 0 else 1 if e > 0 else tie_box
        out.append(box)
        e = e + k2 if box == 0 else e - k1
    start = seen[e]
    seq = SearchSequence(tuple(out[:start]), tuple(out[start:]))
    return (lead if lead is not None else list(out)), seq


def _hider_at(spec: GameSpec, offset: int) -> HiderStrategy:
    """The two-box Hider strategy whose initial index ratio is r^(offset/(k1 k2))."""
    k1, k2 = spec.root_exponents
    r1, r2 = spec.overlook
    x, y = _bezout(k2, k1)  # offset = offset*x*k2 + offset*y*k1
    a, b = offset * x, -offset * y
    scale = (r1**a if a >= 0 else 1 / r1 ** (-a)) / (r2**b if b >= 0 else 1 / r2 ** (-b))
    q1, q2 = spec.detection
    t1, t2 = spec.times
    ratio = scale * (q2 * t1) / (q1 * t2)  # p1 / p2
    return HiderStrategy((ratio / (1 + ratio), 1 / (1 + ratio)))


@dataclass
class TwoBoxSolution:
    """Saddle point of a two-box game with common root.

    The Hider's optimal strategy makes the Searcher indifferent between two
    Gittins sequences sharing the lead ``lead`` and then repeating the blocks
    ``blocks[0]`` (ties to box 1) or ``blocks[1]`` (ties to box 2).  The
    optimal mixture puts ``weights`` on them.
    """

    offset: int
    hider: HiderStrategy
    lead: tuple[int, ...]
    sequences: tuple[SearchSequence, SearchSequence]
    blocks: tuple[tuple[int, ...], tuple[int, ...]]
    weights: tuple
    value: Scalar
    differences: tuple  # u(1, .) - u(2, .) for each sequence

    @property
    def equalizing_optimal(self) -> bool:
        return self.offset == 0

    @property
    def mixture(self) -> MixedSearchStrategy:
        return MixedSearchStrategy.from_pairs(list(zip(self.sequences, self.weights)))

    def report(self) -> GameValueReport:
        return GameValueReport(self.value, self.hider, self.mixture, "two-box Gittins saddle point")


def two_box_solution(spec: GameSpec, cap: int = 1 << 20) -> TwoBoxSolution:
    """Solve a two-box game with common-root structure.

    Each integer offset e fixes a Hider strategy (index ratio r^(e/(k1 k2)))
    and, for each tie rule, a Gittins sequence.  The payoff difference
    u(1, .) - u(2, .) of the tie-to-box-1 sequence is non-decreasing in e;
    the saddle point sits at the largest e where it is still <= 0.
    """
    if spec.n != 2:
        raise ValidationError("two_box_solution needs exactly two boxes")
    spec.require_root()
    k1, k2 = spec.root_exponents

    def diff(e: int, tie: int):
        lead, seq = _walk(k1, k2, e, tie, cap=WALK_CAP + abs(e) * (k1 + k2))
        return expected_time(spec, 0, seq) - expected_time(spec, 1, seq), seq, lead

    # exponential search for a bracket diff(lo) <= 0 < diff(hi)
    lo, hi = -1, 0
    while diff(hi, 0)[0] <= 0:
        lo, hi = hi, max(1, 2 * hi)
        if hi > cap:
            raise ValidationError("could not bracket the saddle point")
    while diff(lo, 0)[0] > 0:
        lo, hi = 2 * lo, lo
        if -lo > cap:
            raise ValidationError("could not bracket the saddle point")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if diff(mid, 0)[0] <= 0:
            lo = mid
        else:
            hi = mid
    g_a, seq_a, lead = diff(lo, 0)
    g_b, seq_b, _ = diff(lo, 1)
    hider = _hider_at(spec, lo)
    if g_a == 0 or close(g_a, 0) and not all_exact([g_a]):
        weights = (Fraction(1), Fraction(0)) if is_exact(g_a) else (1.0, 0.0)
    else:
        lam = g_b / (g_b - g_a)
        weights = (lam, 1 - lam)
    _, tail_a = _walk(k1, k2, 0, 0)
    _, tail_b = _walk(k1, k2, 0, 1)
    value = weights[0] * expected_time(spec, 0, seq_a) + weights[1] * expected_time(spec, 0, seq_b)
    return TwoBoxSolution(lo, hider, tuple(lead), (seq_a, seq_b), (tail_a.cycle, tail_b.cycle),
                          weights, value, (g_a, g_b))


def _finish_witness(spec: GameSpec, lead: Sequence[int], blocks, schedule: BlockSchedule, value) -> SynthesisResult:
    """Prepend *lead* to the interleaving of *blocks* along *schedule* and check it."""
    built = interleave(blocks, schedule)
    payoffs = [value] * spec.n
    if schedule.periodic:
        seq = SearchSequence(tuple(lead) + built.prefix, built.cycle).canonical()
        for i in range(spec.n):
            got = expected_time(spec, i, seq)
            if not close(got, value, 1e-9):
                raise SynthesisError(f"witness payoff {got} for box {i + 1} differs from V = {value}")
        return SynthesisResult(seq, schedule, list(blocks), payoffs, tuple(lead) + tuple(built.prefix))
    prefix = tuple(lead) + tuple(built)
    enclosures = [schedule_enclosure(spec, i, blocks, schedule.prefix, lead) for i in range(spec.n)]
    for lo, hi in enclosures:
        if not lo - 1e-9 * abs(lo) <= value <= hi + 1e-9 * abs(hi):
            raise SynthesisError(f"V = {value} escapes the enclosure [{lo}, {hi}]")
    return SynthesisResult(None, schedule, list(blocks), payoffs, prefix, enclosures)


def _greedy_witness(spec, lead, blocks, lambdas, value) -> SynthesisResult:
    """Try the greedy rules in turn and keep the first periodic schedule."""
    first = None
    rules = ("smallest",) if never_periodic(lambdas, spec.common_root) else ("smallest", "min_denominator", "largest")
    for rule in rules:
        schedule = greedy_schedule(lambdas, spec.common_root, rule)
        result = _finish_witness(spec, lead, blocks, schedule, value)
        if result.exact_witness:
            return result
        first = first or result
    return first


def _drop_zero(blocks, weights):
    kept = [(b, w) for b, w in zip(blocks, weights) if w != 0]
    return [b for b, _ in kept], [w for _, w in kept]


@lru_cache(maxsize=None)
def _r_star_cached(k: int) -> float:
    return float(r_star(k))


def existence_certificate(spec: GameSpec, schedule_depth: int = 200, schedule_nodes: int = 100_000) -> ExistenceCertificate:
    """Decide whether an optimal pure Searcher strategy exists.

    Rules are tried in order and the first that fires decides:

    1. equal q <= 1/n: exists (synthesised from the cyclic mixture);
    2. equal q > q*: does not exist;
    3. two boxes, common root r >= 1/2: exists (Gittins lead + synthesised tail);
    4. two boxes, equal q inside the no-pure interval: does not exist;
    5. two boxes, t_1 = t_2, k = (k, k+1), k <= 12, r < r*(k): does not exist;
    6. two boxes, exact data: exhaustive schedule search for the saddle weights;
    7. otherwise unknown.
    """
    n = spec.n
    equal_q = spec.equal_detection()
    bounds: dict = {}
    if equal_q:
        q = spec.detection[0]
        bounds["q_star"] = q_star(spec)
        if q <= ratio(1, n, q):
            report = value_equal_q(spec)
            if q == 1:  # n = 1: the single box repeated
                seq = SearchSequence.periodic((0,))
                return ExistenceCertificate("exists", "equal-q<=1/n", seq, report.value, bounds)
            blocks = [s.cycle for s in report.searcher_optimal.sequences]
            synth = _greedy_witness(spec, (), blocks, report.searcher_optimal.weights, report.value)
            return ExistenceCertificate("exists", "equal-q<=1/n", synth.sequence, report.value, bounds, synth)
        if q > bounds["q_star"]:
            return ExistenceCertificate("not_exists", "equal-q>q*", None, value_equal_q(spec).value, bounds)
    if n == 2 and spec.has_root:
        r = spec.common_root
        if r >= ratio(1, 2, r):
            sol = two_box_solution(spec)
            bounds["lambda_1"] = sol.weights[0]
            blocks, weights = _drop_zero(sol.blocks, sol.weights)
            synth = _greedy_witness(spec, sol.lead, blocks, weights, sol.value)
            return ExistenceCertificate("exists", "two-box r>=1/2", synth.sequence, sol.value, bounds, synth)
    if n == 2 and equal_q:
        interval = no_pure_interval(spec)
        if interval is not None:
            bounds["no_pure_interval"] = interval
            if in_no_pure_interval(spec):
                return ExistenceCertificate("not_exists", "two-box no-pure interval", None, value_equal_q(spec).value, bounds)
    if n == 2 and spec.has_root and spec.times[0] == spec.times[1]:
        k1, k2 = spec.root_exponents
        k = min(k1, k2)
        if abs(k1 - k2) == 1 and k <= 12:
            bounds["r_star"] = _r_star_cached(k)
            if spec.common_root < bounds["r_star"]:
                return ExistenceCertificate("not_exists", "two-box r<r*(k)", None, None, bounds)
    if n == 2 and spec.has_root and spec.exact:
        sol = two_box_solution(spec)
        bounds["lambda_1"] = sol.weights[0]
        blocks, weights = _drop_zero(sol.blocks, sol.weights)
        if len(blocks) == 1:
            seq = SearchSequence(sol.lead, blocks[0]).canonical()
            return ExistenceCertificate("exists", "two-box schedule search", seq, sol.value, bounds)
        found = search_schedule(weights, spec.common_root, schedule_depth, schedule_nodes)
        if found.status == "periodic":
            synth = _finish_witness(spec, sol.lead, blocks, found.schedule, sol.value)
            return ExistenceCertificate("exists", "two-box schedule search", synth.sequence, sol.value, bounds, synth)
        if found.status == "none":
            return ExistenceCertificate("not_exists", "two-box schedule search", None, sol.value, bounds,
                                        notes=[f"every schedule dies within {found.deepest} steps"])
        return ExistenceCertificate("unknown", "none", None, sol.value, bounds,
                                    notes=[f"schedule search inconclusive after {found.nodes} nodes"])
    return ExistenceCertificate("unknown", "none", None, None, bounds)


# -- r* for t_1 = t_2, r_1^k = r_2^(k+1) = r --------------------------------------


@lru_cache(maxsize=None)
def _rstar_blocks(k: int):
    _, s1 = _walk(k, k + 1, 0, 0)
    _, s2 = _walk(k, k + 1, 0, 1)
    return s1.cycle, s2.cycle


def lambda_1(k: int, r) -> Scalar:
    """Weight on the box-1-first cycle in the saddle mixture, equal unit times."""
    _, s2 = _rstar_blocks(k)
    spec = GameSpec.from_root((1, 1), r, (k, k + 1), mode="quad")
    w = block_weights(spec, s2).block_weights
    q1, q2 = spec.detection
    return (w[0] - w[1]) / (q1 + q2)


def _rstar_gap(k: int, r):
    lam = lambda_1(k, r)
    return min(lam, 1 - lam) - r


def r_star(k: int, tol: float = R_STAR_TOL, step: float = 1e-3):
    """Smallest r where r < min(lambda_1, 1 - lambda_1) stops holding."""
    if k not in R_STAR_KS:
        raise ValidationError(f"k must lie in 1..12, got {k}")
    with mpmath.workprec(QUAD_BITS):
        lo = mpmath.mpf(step) / 10
        if _rstar_gap(k, lo) <= 0:
            raise ValidationError("condition already fails at the smallest grid point")
        hi = lo
        while _rstar_gap(k, hi) > 0:
            lo, hi = hi, hi + step
            if hi >= 1:
                raise ValidationError("condition holds on the whole grid")
        while hi - lo > tol:
            mid = (lo + hi) / 2
            if _rstar_gap(k, mid) > 0:
                lo = mid
            else:
                hi = mid
        return (lo + hi) / 2


def r_star_table(ks: Sequence[int] = R_STAR_KS) -> list[tuple[int, float]]:
    return [(k, float(r_star(k))) for k in ks]
