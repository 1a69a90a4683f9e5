"""Monte Carlo estimates of expected search times.

Each trial fixes the Hider's box (and, for mixtures, the Searcher's sequence)
and then walks the sequence; every visit to the Hider's box detects with
probability q_i independently.  The number of visits needed is therefore
geometric, which is how it is drawn.

Trials are generated in fixed-size chunks, chunk c using a Philox stream keyed
by ``(seed, c)``, so results depend only on the seed and the trial count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import GameSpec, HiderStrategy, MixedSearchStrategy, SearchSequence, ValidationError

CHUNK = 1 << 16
TAIL_TARGET = 1e-12


@dataclass(frozen=True)
class SimConfig:
    trials: int = 100_000
    seed: int = 0
    max_searches: int | None = None  # per trial, counted in visits to the Hider's box

    def __post_init__(self):
        if self.trials < 1:
            raise ValidationError("trials must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")
        if self.max_searches is not None and self.max_searches < 1:
            raise ValidationError("max_searches must be positive")


@dataclass
class SimEstimate:
    mean: float
    std_error: float
    trials: int
    censored: int = 0

    @property
    def flagged(self) -> bool:
        """True when some trial hit the search cap (the mean is then biased low)."""
        return self.censored > 0

    def within(self, exact, sigmas: float = 3.0) -> bool:
        return abs(self.mean - float(exact)) <= sigmas * self.std_error


def _rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, chunk])))


def default_max_searches(q) -> int:
    """Smallest K with (1 - q)^K below 1e-12."""
    q = float(q)
    if q >= 1:
        return 1
    return max(1, math.ceil(math.log(TAIL_TARGET) / math.log1p(-q)))


class _Timetable:
    """Elapsed time at the l-th visit (l = 1, 2, ...) of one box, vectorised."""

    def __init__(self, spec: GameSpec, box: int, seq: SearchSequence):
        if box not in seq.cycle:
            raise ValidationError(f"box {box + 1} is not in the cycle of {seq}")
        t = [float(x) for x in spec.times]
        elapsed = 0.0
        self.head = []
        for b in seq.prefix:
            elapsed += t[b]
            if b == box:
                self.head.append(elapsed)
        self.start = elapsed
        self.offsets = []
        for b in seq.cycle:
            elapsed += t[b]
            if b == box:
                self.offsets.append(elapsed - self.start)
        self.period = elapsed - self.start
        self.head = np.array(self.head)
        self.offsets = np.array(self.offsets)

    def __call__(self, visits: np.ndarray) -> np.ndarray:
        out = np.empty(visits.shape, dtype=float)
        n_head = len(self.head)
        early = visits <= n_head
        out[early] = self.head[visits[early] - 1] if n_head else 0.0
        later = visits[~early] - n_head - 1
        rounds, within = np.divmod(later, len(self.offsets))
        out[~early] = self.start + rounds * self.period + self.offsets[within]
        return out


def _summarise(samples: list[np.ndarray], censored: int) -> SimEstimate:
    values = np.concatenate(samples) if samples else np.array([])
    if values.size == 0:
        return SimEstimate(math.nan, math.nan, 0, censored)
    mean = float(np.sum(values) / values.size)
    std = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
    return SimEstimate(mean, std / math.sqrt(values.size), int(values.size), censored)


def _chunks(trials: int):
    for c in range((trials + CHUNK - 1) // CHUNK):
        yield c, min(CHUNK, trials - c * CHUNK)


def sample_visits(spec: GameSpec, box: int, config: SimConfig):
    """Visits to *box* needed for detection in each trial, and the censoring mask."""
    q = float(spec.detection[box])
    cap = config.max_searches or default_max_searches(q)
    draws = np.concatenate([_rng(config.seed, c).geometric(q, size) for c, size in _chunks(config.trials)])
    return draws, draws > cap


def estimate_expected_time(spec: GameSpec, box: int, seq: SearchSequence, config: SimConfig) -> SimEstimate:
    """Monte Carlo estimate of u(box, seq) with its standard error."""
    seq.check_boxes(spec.n)
    table = _Timetable(spec, box, seq)
    q = float(spec.detection[box])
    cap = config.max_searches or default_max_searches(q)
    samples, censored = [], 0
    for c, size in _chunks(config.trials):
        visits = _rng(config.seed, c).geometric(q, size)
        ok = visits <= cap
        censored += int(size - ok.sum())
        samples.append(table(visits[ok]))
    return _summarise(samples, censored)


def estimate_mixed(spec: GameSpec, hider: HiderStrategy, theta: MixedSearchStrategy, config: SimConfig) -> SimEstimate:
    """Monte Carlo estimate of u(hider, theta): box and sequence drawn independently per trial."""
    p = np.array([float(x) for x in hider.probs])
    w = np.array([float(x) for x in theta.weights])
    p, w = p / p.sum(), w / w.sum()
    seqs = theta.sequences
    if np.count_nonzero(p) == 1 and np.count_nonzero(w) == 1:
        # degenerate mixture: same draws as the single-box estimator
        return estimate_expected_time(spec, int(np.argmax(p)), seqs[int(np.argmax(w))], config)
    tables = {}
    for i in np.flatnonzero(p > 0):
        for j, s in enumerate(seqs):
            if w[j] > 0:
                tables[i, j] = _Timetable(spec, int(i), s)
    qs = np.array([float(x) for x in spec.detection])
    caps = np.array([config.max_searches or default_max_searches(q) for q in qs])
    samples, censored = [], 0
    for c, size in _chunks(config.trials):
        rng = _rng(config.seed, c)
        boxes = rng.choice(len(p), size=size, p=p)
        picks = rng.choice(len(w), size=size, p=w)
        visits = rng.geometric(qs[boxes])
        ok = visits <= caps[boxes]
        censored += int(size - ok.sum())
        times = np.empty(size)
        for (i, j), table in tables.items():
            mask = ok & (boxes == i) & (picks == j)
            if mask.any():
                times[mask] = table(visits[mask])
        samples.append(times[ok])
    return _summarise(samples, censored)
