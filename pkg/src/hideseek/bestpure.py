"""Best pure strategy for two boxes by branch and bound.

The Searcher's pure strategy is judged by its worst case max_i u(i, xi).  The
search grows a finite prefix one move at a time (a move is a single box, or a
whole Gittins block in ``"blocks"`` mode) and completes every prefix with each
of a set of periodic tails.

Lower bound for a prefix: for any Hider mixture p and any continuation zeta,

    max_i u(i, prefix + zeta) >= sum_i p_i u(i, prefix + zeta)
                              >= sum_i p_i (acc_i + surv_i P) + min_zeta sum_i p_i surv_i u(i, zeta)

and the minimum is attained by a Gittins best response to the posterior
p_i surv_i.  The bound holds for every continuation, not only the tails, so
the smallest bound on the unexpanded frontier caps how much any unexplored
sequence could improve on the incumbent.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .analysis import two_box_solution, value_equal_q
from .core import (
    GameSpec,
    HiderStrategy,
    MixedSearchStrategy,
    Scalar,
    SearchSequence,
    ValidationError,
)
from .gittins import best_response
from .payoff import expected_time, expected_time_mixed, is_infinite

DEPTH_CAP = 24
DEFAULT_TAIL_LENGTH = 6
MODES = ("boxes", "blocks")


@dataclass(frozen=True)
class SearchNode:
    """A committed prefix and its per-box partial payoff, survival probability
    and elapsed time."""

    moves: tuple[int, ...]
    boxes: tuple[int, ...]
    acc: tuple
    surv: tuple
    elapsed: Scalar
    counts: tuple[int, ...]
    bound: Scalar = 0

    def extend(self, spec: GameSpec, move: int, boxes: Sequence[int]) -> "SearchNode":
        acc, surv, counts = list(self.acc), list(self.surv), list(self.counts)
        elapsed = self.elapsed
        for b in boxes:
            elapsed += spec.times[b]
            acc[b] += surv[b] * spec.detection[b] * elapsed
            surv[b] *= spec.overlook[b]
            counts[b] += 1
        return SearchNode(self.moves + (move,), self.boxes + tuple(boxes), tuple(acc), tuple(surv),
                          elapsed, tuple(counts))

    def completion(self, box: int, tail_value: Scalar) -> Scalar:
        return self.acc[box] + self.surv[box] * (self.elapsed + tail_value)


@dataclass
class BestPureResult:
    best: SearchSequence
    value: Scalar
    ties: list[SearchSequence]
    lower_bound: Scalar
    game_value: Scalar | None
    nodes: int
    pruned: int
    depth: int
    mode: str
    seconds: float = 0.0

    @property
    def slack(self):
        """Excess of the best value found over the game value (zero: globally optimal)."""
        return None if self.game_value is None else self.value - self.game_value

    @property
    def gap(self):
        """How much an unexplored sequence could still improve on the best found."""
        return self.value - self.lower_bound


def _primitive_words(alphabet: int, max_len: int) -> list[tuple[int, ...]]:
    out = []
    for length in range(1, max_len + 1):
        for word in itertools.product(range(alphabet), repeat=length):
            if SearchSequence.periodic(word).canonical().cycle == word:
                out.append(word)
    return out


def _moves(spec: GameSpec, mode: str) -> list[tuple[int, ...]]:
    if mode == "boxes":
        return [(0,), (1,)]
    if mode == "blocks":
        sol = two_box_solution(spec)
        return [tuple(b) for b in sol.blocks]
    raise ValidationError(f"unknown mode {mode!r}; expected one of {MODES}")


def default_tails(spec: GameSpec, mode: str = "boxes", max_len: int = DEFAULT_TAIL_LENGTH) -> list[SearchSequence]:
    """Every primitive cycle over the move alphabet up to *max_len* moves that searches both boxes."""
    moves = _moves(spec, mode)
    tails = []
    for word in _primitive_words(len(moves), max_len):
        cycle = tuple(b for m in word for b in moves[m])
        if 0 in cycle and 1 in cycle:
            tails.append(SearchSequence.periodic(cycle))
    return list(dict.fromkeys(tails))


class _Bounder:
    """Admissible lower bounds, with the Gittins minimum cached per count vector."""

    def __init__(self, spec: GameSpec):
        self.spec = spec
        self.mixtures: list[HiderStrategy] = []
        try:
            self.mixtures.append(two_box_solution(spec).hider)
        except ValidationError:
            pass
        self.cache: dict[tuple, Scalar | None] = {}

    def _gittins_min(self, p: HiderStrategy, counts, surv):
        key = (p.probs, counts)
        if key not in self.cache:
            weights = [pi * s for pi, s in zip(p.probs, surv)]
            total = sum(weights)
            post = HiderStrategy(tuple(w / total for w in weights))
            run = best_response(self.spec, post)
            if run.sequence is None:
                self.cache[key] = None
            else:
                self.cache[key] = total * expected_time_mixed(self.spec, post, MixedSearchStrategy.pure(run.sequence))
        return self.cache[key]

    def bound(self, node: SearchNode):
        spec = self.spec
        # a Hider fixed in box i: at best box i is searched forever
        best = max(node.completion(i, spec.times[i] / spec.detection[i]) for i in range(spec.n))
        for p in self.mixtures:
            tail = self._gittins_min(p, node.counts, node.surv)
            if tail is None:
                continue
            lb = sum(pi * (a + s * node.elapsed) for pi, a, s in zip(p.probs, node.acc, node.surv)) + tail
            best = max(best, lb)
        return best


def _mirror(seq: SearchSequence) -> SearchSequence:
    return SearchSequence(tuple(1 - b for b in seq.prefix), tuple(1 - b for b in seq.cycle)).canonical()


def best_pure_two_box(spec: GameSpec, depth: int, tails: Sequence[SearchSequence] | None = None,
                      mode: str = "boxes", symmetry: bool = True) -> BestPureResult:
    """Minimise max(u(1, xi), u(2, xi)) over prefixes of up to *depth* moves
    followed by a tail from *tails*.

    ``mode="boxes"`` branches on single searches; ``mode="blocks"`` on the two
    consistent Gittins blocks against the Hider's optimal strategy.  Nodes are
    pruned only when their bound strictly exceeds the incumbent, so every
    sequence tying the best value is reported.
    """
    if spec.n != 2:
        raise ValidationError("best_pure_two_box needs exactly two boxes")
    spec.require_root()
    if not 0 <= depth <= DEPTH_CAP:
        raise ValidationError(f"depth must lie in 0..{DEPTH_CAP}")
    started = time.perf_counter()
    moves = _moves(spec, mode)
    tails = default_tails(spec, mode) if tails is None else [t.canonical() for t in tails]
    tails = [t for t in tails if 0 in t.cycle and 1 in t.cycle]
    if not tails:
        raise ValidationError("no tail searches both boxes")
    exact_tail = [[expected_time(spec, i, t) for t in tails] for i in range(2)]
    float_tail = np.array([[float(x) for x in row] for row in exact_tail])
    symmetric = (symmetry and mode == "boxes" and spec.times[0] == spec.times[1]
                 and spec.detection[0] == spec.detection[1])
    bounder = _Bounder(spec)
    try:
        game_value = value_equal_q(spec).value if spec.equal_detection() else two_box_solution(spec).value
    except ValidationError:
        game_value = None

    incumbent = None
    ties: list[SearchSequence] = []
    frontier_min = None
    nodes = pruned = 0

    def consider(node: SearchNode):
        nonlocal incumbent, ties
        acc = np.array([float(a) for a in node.acc])
        surv = np.array([float(s) for s in node.surv])
        values = (acc[:, None] + surv[:, None] * (float(node.elapsed) + float_tail)).max(axis=0)
        limit = values.min() if incumbent is None else min(values.min(), float(incumbent))
        for j in np.flatnonzero(values <= limit * (1 + 1e-9)):
            exact = max(node.completion(i, exact_tail[i][j]) for i in range(2))
            seq = SearchSequence(node.boxes, tails[j].cycle).canonical()
            if incumbent is None or exact < incumbent:
                incumbent, ties = exact, [seq]
            elif exact == incumbent and seq not in ties:
                ties.append(seq)

    root = SearchNode((), (), (0, 0), (1, 1), 0, (0, 0))
    stack = [root]
    while stack:
        node = stack.pop()
        nodes += 1
        lb = bounder.bound(node)
        if incumbent is not None and lb > incumbent:
            pruned += 1
            continue
        consider(node)
        if len(node.moves) >= depth:
            frontier_min = lb if frontier_min is None else min(frontier_min, lb)
            continue
        choices = range(len(moves))
        if symmetric and not node.moves:
            choices = [0]
        for m in reversed(choices):
            stack.append(node.extend(spec, m, moves[m]))

    if symmetric:
        for seq in list(ties):
            mirrored = _mirror(seq)
            if mirrored not in ties:
                ties.append(mirrored)
    lower = incumbent if frontier_min is None else min(incumbent, frontier_min)
    if incumbent is not None and frontier_min is not None and game_value is not None:
        lower = max(lower, min(game_value, incumbent))
    return BestPureResult(ties[0], incumbent, ties, lower, game_value, nodes, pruned, depth, mode,
                          time.perf_counter() - started)


@dataclass
class EqualizedCheck:
    equal: bool
    payoffs: tuple
    difference: Scalar

    @property
    def value(self):
        return self.payoffs[0] if self.equal else None


def equalized_payoff_check(spec: GameSpec, seq: SearchSequence) -> EqualizedCheck:
    """Does *seq* give the same expected time whichever box the Hider uses?"""
    if spec.n != 2:
        raise ValidationError("equalized_payoff_check needs exactly two boxes")
    u1, u2 = expected_time(spec, 0, seq), expected_time(spec, 1, seq)
    if is_infinite(u1) or is_infinite(u2):
        return EqualizedCheck(False, (u1, u2), float("nan"))
    return EqualizedCheck(u1 == u2, (u1, u2), u1 - u2)


def conjecture_candidate(m: int) -> SearchSequence:
    """1, 2, then m-1 searches of box 2 and m-1 of box 1, repeated."""
    return SearchSequence((0, 1), (1,) * (m - 1) + (0,) * (m - 1))


def conjecture_closed_form(m: int) -> Fraction:
    return 2 + Fraction(1, m) + Fraction(m ** (m - 2) + m - 2, (m - 1) * (m ** (m - 1) - 1))


@dataclass
class ConjectureReport:
    m: int
    candidate: SearchSequence
    candidate_value: Scalar
    closed_form: Fraction
    search: BestPureResult
    beaten: bool
    forced_prefix: tuple[int, ...] = field(default=())


def _common_prefix(seqs: Sequence[SearchSequence], length: int) -> tuple[int, ...]:
    words = [s.take(length) for s in seqs]
    out = []
    for column in zip(*words):
        if len(set(column)) != 1:
            break
        out.append(column[0])
    return tuple(out)


def conjecture1_scan(m: int, depth: int, mode: str = "boxes", tails: Sequence[SearchSequence] | None = None) -> ConjectureReport:
    """Search unit-time boxes with q = (m-1)/m for anything beating the candidate.

    ``forced_prefix`` is the longest prefix shared by every best sequence found
    that starts with box 1 (the box labels can be swapped).
    """
    if m < 2:
        raise ValidationError("m must be at least 2")
    q = Fraction(m - 1, m)
    spec = GameSpec.build((1, 1), (q, q))
    cand = conjecture_candidate(m)
    values = [expected_time(spec, i, cand) for i in range(2)]
    if tails is None:
        tails = default_tails(spec, mode) + [SearchSequence.periodic(cand.cycle)]
    result = best_pure_two_box(spec, depth, tails, mode)
    cand_value = max(values)
    starts_one = [s for s in result.ties if s[0] == 0]
    forced = _common_prefix(starts_one, 4 * depth) if starts_one else ()
    return ConjectureReport(m, cand, cand_value, conjecture_closed_form(m), result,
                            result.value < cand_value, forced)
