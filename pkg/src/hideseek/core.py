"""Domain types shared by every other module.

Numbers are either exact (``int`` / :class:`fractions.Fraction`) or floating
(``float`` or :class:`mpmath.mpf`).  Arithmetic is written generically so the
same code path runs in both modes; mixing exact and floating operands gives a
floating result through Python's normal coercion rules.

Box indices are 0-based inside the library.  The text/JSON formats
(:meth:`SearchSequence.parse`, :meth:`SearchSequence.format`, the CLI) are
1-based.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Iterable, Sequence, Union

import mpmath

Scalar = Union[int, Fraction, float, mpmath.mpf]

PRECISION_ENV = "HIDESEEK_PRECISION"
PRECISION_MODES = ("rational", "double", "quad")
QUAD_BITS = 113
DEFAULT_TOLERANCE = 1e-12


class ValidationError(ValueError):
    """Raised when a game, strategy or sequence violates its invariants."""


# -- scalars -----------------------------------------------------------------


def is_exact(x) -> bool:
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


def all_exact(values: Iterable) -> bool:
    return all(is_exact(v) for v in values)


def precision_mode(default: str | None = None) -> str | None:
    """Return the precision override from ``HIDESEEK_PRECISION`` (or *default*)."""
    mode = os.environ.get(PRECISION_ENV, "").strip().lower() or default
    if mode is not None and mode not in PRECISION_MODES:
        raise ValidationError(f"{PRECISION_ENV} must be one of {PRECISION_MODES}, got {mode!r}")
    return mode


def convert(x: Scalar, mode: str | None) -> Scalar:
    """Convert *x* to the numeric type used by *mode* (``None`` leaves it alone)."""
    if mode is None:
        return x
    if mode == "rational":
        if is_exact(x):
            return Fraction(x)
        if isinstance(x, mpmath.mpf):
            return Fraction(mpmath.nstr(x, 40, strip_zeros=False)) if mpmath.isfinite(x) else x
        return Fraction(repr(float(x)))
    if mode == "double":
        return float(x)
    if mode == "quad":
        with mpmath.workprec(QUAD_BITS):
            if isinstance(x, Fraction):
                return mpmath.mpf(x.numerator) / x.denominator
            return mpmath.mpf(x)
    raise ValidationError(f"unknown precision mode {mode!r}")


def parse_scalar(value, mode: str | None = None) -> Scalar:
    """Parse a scalar literal.

    ``"p/q"`` and decimal strings such as ``"2.88"`` are exact; a leading
    ``"~"`` marks a floating literal (``"~0.3991"``).  Python numbers are
    accepted as-is.
    """
    if isinstance(value, bool):
        raise ValidationError(f"not a number: {value!r}")
    if isinstance(value, (int, Fraction)):
        x: Scalar = Fraction(value)
    elif isinstance(value, (float, mpmath.mpf)):
        x = value
    elif isinstance(value, str):
        text = value.strip()
        try:
            if text.startswith("~"):
                x = convert(mpmath.mpf(text[1:].strip()), "quad") if mode == "quad" else float(text[1:])
                if mode == "rational":
                    x = Fraction(text[1:].strip())
            else:
                x = Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"cannot parse scalar {value!r}") from exc
    else:
        raise ValidationError(f"cannot parse scalar {value!r}")
    if mode == "rational" and not is_exact(x):
        x = convert(x, "rational")
    elif mode in ("double", "quad"):
        x = convert(x, mode)
    return x


def format_scalar(x: Scalar, digits: int = 17) -> str:
    """Exact values print as ``p/q``; floats as ``~digits``; infinities as ``infinite``."""
    if is_exact(x):
        f = Fraction(x)
        return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"
    if isinstance(x, mpmath.mpf):
        if mpmath.isinf(x):
            return "infinite"
        return "~" + mpmath.nstr(x, 34)
    if math.isinf(x):
        return "infinite"
    return "~" + repr(float(x)) if digits >= 17 else "~" + f"{x:.{digits}g}"


def ratio(num: int, den: int, like: Scalar) -> Scalar:
    """num/den in the numeric type of *like* (so comparisons never mix Fraction and mpf)."""
    if is_exact(like):
        return Fraction(num, den)
    if isinstance(like, mpmath.mpf):
        return mpmath.mpf(num) / den
    return num / den


def close(a: Scalar, b: Scalar, rel: float = DEFAULT_TOLERANCE) -> bool:
    """Equality: exact for exact operands, relative tolerance otherwise."""
    if is_exact(a) and is_exact(b):
        return a == b
    return abs(a - b) <= rel * max(1, abs(a), abs(b))


def exact_root(x: Fraction, k: int) -> Fraction | None:
    """Return the rational k-th root of *x* if it exists, else ``None``."""
    x = Fraction(x)
    if x < 0 or k < 1:
        return None

    def iroot(n: int) -> int | None:
        if n < 2:
            return n
        # integer Newton iteration from above converges to floor(n ** (1/k))
        y = 1 << -(-n.bit_length() // k)
        while True:
            z = ((k - 1) * y + n // y ** (k - 1)) // k
            if z >= y:
                break
            y = z
        return y if y**k == n else None

    num, den = iroot(x.numerator), iroot(x.denominator)
    if num is None or den is None:
        return None
    return Fraction(num, den)


def root(x: Scalar, k: int) -> Scalar:
    """k-th root, exact when a rational root exists."""
    if k == 1:
        return x
    if is_exact(x):
        exact = exact_root(Fraction(x), k)
        if exact is not None:
            return exact
        return float(x) ** (1.0 / k)
    if isinstance(x, mpmath.mpf):
        return mpmath.root(x, k)
    return x ** (1.0 / k)


# -- game --------------------------------------------------------------------


@dataclass(frozen=True)
class BoxParams:
    search_time: Scalar
    detection_prob: Scalar

    def __post_init__(self):
        if not self.search_time > 0:
            raise ValidationError(f"search time must be positive, got {self.search_time}")
        if not 0 < self.detection_prob <= 1:
            raise ValidationError(f"detection probability must lie in (0, 1], got {self.detection_prob}")

    @property
    def overlook_prob(self) -> Scalar:
        return 1 - self.detection_prob


@dataclass(frozen=True)
class GameSpec:
    """A game instance.

    ``root_exponents`` and ``common_root`` describe the optional common-root
    structure ``r_i ** k_i == r``.  When all overlook probabilities are equal
    and in (0, 1) the structure ``k = (1, ..., 1)`` is filled in automatically.
    """

    boxes: tuple[BoxParams, ...]
    root_exponents: tuple[int, ...] | None = None
    common_root: Scalar | None = None
    tolerance: float = DEFAULT_TOLERANCE

    def __post_init__(self):
        object.__setattr__(self, "boxes", tuple(self.boxes))
        if not self.boxes:
            raise ValidationError("a game needs at least one box")
        if (self.root_exponents is None) != (self.common_root is None):
            raise ValidationError("root exponents and common root must be given together")
        if self.root_exponents is None:
            rs = self.overlook
            if all(r == rs[0] for r in rs) and 0 < rs[0] < 1:
                object.__setattr__(self, "root_exponents", (1,) * self.n)
                object.__setattr__(self, "common_root", rs[0])
            return
        ks = tuple(int(k) for k in self.root_exponents)
        object.__setattr__(self, "root_exponents", ks)
        if len(ks) != self.n:
            raise ValidationError(f"expected {self.n} root exponents, got {len(ks)}")
        if any(k < 1 for k in ks):
            raise ValidationError("root exponents must be positive integers")
        if reduce(math.gcd, ks) != 1:
            raise ValidationError(f"root exponents {ks} are not coprime")
        r = self.common_root
        if not 0 < r < 1:
            raise ValidationError(f"common root must lie in (0, 1), got {r}")
        for i, (ri, k) in enumerate(zip(self.overlook, ks)):
            if not close(ri**k, r, self.tolerance):
                raise ValidationError(f"box {i + 1}: r_i^k_i = {ri ** k} differs from r = {r}")

    @classmethod
    def build(cls, times: Sequence, probs: Sequence, k: Sequence[int] | None = None,
              r=None, mode: str | None = None, tolerance: float = DEFAULT_TOLERANCE) -> "GameSpec":
        """Construct from plain sequences; strings go through :func:`parse_scalar`."""
        if len(times) != len(probs):
            raise ValidationError("times and detection probabilities differ in length")
        boxes = tuple(BoxParams(parse_scalar(t, mode), parse_scalar(q, mode)) for t, q in zip(times, probs))
        rr = None if r is None else parse_scalar(r, mode)
        return cls(boxes, None if k is None else tuple(k), rr, tolerance)

    @classmethod
    def from_root(cls, times: Sequence, r, k: Sequence[int], mode: str | None = None,
                  tolerance: float = DEFAULT_TOLERANCE) -> "GameSpec":
        """Construct from the common root: ``q_i = 1 - r ** (1/k_i)``.

        Exact whenever every root is rational; floating otherwise (quad
        precision when ``mode == "quad"``).
        """
        rr = parse_scalar(r, mode)
        qs = []
        for ki in k:
            ri = root(rr, ki)
            if not is_exact(ri) and mode == "quad":
                with mpmath.workprec(QUAD_BITS):
                    ri = mpmath.root(convert(rr, "quad"), ki)
            qs.append(1 - ri)
        boxes = tuple(BoxParams(parse_scalar(t, mode), q) for t, q in zip(times, qs))
        return cls(boxes, tuple(k), rr, tolerance)

    @property
    def n(self) -> int:
        return len(self.boxes)

    @property
    def times(self) -> tuple:
        return tuple(b.search_time for b in self.boxes)

    @property
    def detection(self) -> tuple:
        return tuple(b.detection_prob for b in self.boxes)

    @property
    def overlook(self) -> tuple:
        return tuple(b.overlook_prob for b in self.boxes)

    @property
    def has_root(self) -> bool:
        return self.root_exponents is not None

    @property
    def exact(self) -> bool:
        values = list(self.times) + list(self.detection)
        if self.common_root is not None:
            values.append(self.common_root)
        return all_exact(values)

    @property
    def cycle_duration(self) -> Scalar:
        """T = sum_i k_i t_i."""
        self.require_root()
        return sum(k * t for k, t in zip(self.root_exponents, self.times))

    def require_root(self) -> None:
        if not self.has_root:
            raise ValidationError("operation needs the common-root structure (k_i, r)")

    def equal_detection(self) -> bool:
        qs = self.detection
        return all(close(q, qs[0], self.tolerance) for q in qs)


def validate_game(spec: GameSpec) -> GameSpec:
    """Re-run all invariant checks and return the (immutable) spec."""
    return GameSpec(spec.boxes, spec.root_exponents, spec.common_root, spec.tolerance)


# -- strategies ----------------------------------------------------------------


def _check_distribution(weights: Sequence[Scalar], what: str, tol: float) -> None:
    if any(w < 0 for w in weights):
        raise ValidationError(f"{what} has a negative entry")
    if not close(sum(weights), 1, tol):
        raise ValidationError(f"{what} sums to {sum(weights)}, not 1")


@dataclass(frozen=True)
class HiderStrategy:
    probs: tuple

    def __post_init__(self):
        object.__setattr__(self, "probs", tuple(self.probs))
        _check_distribution(self.probs, "hider strategy", DEFAULT_TOLERANCE)

    @classmethod
    def point(cls, n: int, i: int) -> "HiderStrategy":
        return cls(tuple(Fraction(int(j == i)) for j in range(n)))

    def __len__(self):
        return len(self.probs)

    def __getitem__(self, i):
        return self.probs[i]


@dataclass(frozen=True, eq=False)
class SearchSequence:
    """An eventually periodic box sequence ``prefix, (cycle)`` with 0-based boxes.

    Equality and hashing use the canonical form, so ``1,2,2,3,(3)`` and
    ``1,2,2,(3)`` compare equal.
    """

    prefix: tuple[int, ...]
    cycle: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(int(b) for b in self.prefix))
        object.__setattr__(self, "cycle", tuple(int(b) for b in self.cycle))
        if not self.cycle:
            raise ValidationError("the periodic part of a sequence cannot be empty")
        if any(b < 0 for b in self.prefix + self.cycle):
            raise ValidationError("box indices must be non-negative")

    @classmethod
    def periodic(cls, cycle: Sequence[int]) -> "SearchSequence":
        return cls((), tuple(cycle))

    @classmethod
    def parse(cls, text: str) -> "SearchSequence":
        """Parse the 1-based literal syntax ``1,2,(2,1)`` (whitespace ignored)."""
        s = "".join(text.split())
        if s.count("(") != 1 or not s.endswith(")") or s.count(")") != 1:
            raise ValidationError(f"sequence {text!r} must end with one parenthesised cycle")
        head, cyc = s[:-1].split("(")
        if head and not head.endswith(","):
            raise ValidationError(f"missing comma before cycle in {text!r}")
        try:
            prefix = [int(x) - 1 for x in head.split(",") if x]
            cycle = [int(x) - 1 for x in cyc.split(",") if x]
        except ValueError as exc:
            raise ValidationError(f"bad box index in {text!r}") from exc
        if any(b < 0 for b in prefix + cycle):
            raise ValidationError(f"box indices are 1-based in {text!r}")
        return cls(tuple(prefix), tuple(cycle))

    def format(self) -> str:
        head = "".join(f"{b + 1}," for b in self.prefix)
        return head + "(" + ",".join(str(b + 1) for b in self.cycle) + ")"

    def __str__(self):
        return self.format()

    def canonical(self) -> "SearchSequence":
        return canonicalize(self)

    def __eq__(self, other):
        if not isinstance(other, SearchSequence):
            return NotImplemented
        a, b = canonicalize(self), canonicalize(other)
        return a.prefix == b.prefix and a.cycle == b.cycle

    def __hash__(self):
        c = canonicalize(self)
        return hash((c.prefix, c.cycle))

    def __getitem__(self, pos: int) -> int:
        if pos < len(self.prefix):
            return self.prefix[pos]
        return self.cycle[(pos - len(self.prefix)) % len(self.cycle)]

    def take(self, count: int) -> list[int]:
        return [self[p] for p in range(count)]

    @property
    def max_box(self) -> int:
        return max(self.prefix + self.cycle)

    def check_boxes(self, n: int) -> None:
        if self.max_box >= n:
            raise ValidationError(f"sequence {self} refers to box {self.max_box + 1} but the game has {n}")


def _primitive_root(word: tuple[int, ...]) -> tuple[int, ...]:
    size = len(word)
    for p in range(1, size + 1):
        if size % p == 0 and word[:p] * (size // p) == word:
            return word[:p]
    return word


def canonicalize(seq: SearchSequence) -> SearchSequence:
    """Shortest cycle, then absorb trailing prefix symbols into the cycle."""
    cycle = _primitive_root(seq.cycle)
    prefix = list(seq.prefix)
    while prefix and prefix[-1] == cycle[-1]:
        prefix.pop()
        cycle = cycle[-1:] + cycle[:-1]
    return SearchSequence(tuple(prefix), cycle)


@dataclass(frozen=True)
class MixedSearchStrategy:
    support: tuple[tuple[SearchSequence, Scalar], ...]

    def __post_init__(self):
        object.__setattr__(self, "support", tuple((s, w) for s, w in self.support))
        if not self.support:
            raise ValidationError("a mixed strategy needs a non-empty support")
        _check_distribution([w for _, w in self.support], "searcher mixture", DEFAULT_TOLERANCE)
        seqs = [s for s, _ in self.support]
        if len(set(seqs)) != len(seqs):
            raise ValidationError("support sequences must be pairwise distinct")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[SearchSequence, Scalar]]) -> "MixedSearchStrategy":
        """Merge duplicate sequences and drop zero weights."""
        merged: dict[SearchSequence, Scalar] = {}
        for s, w in pairs:
            merged[s] = merged.get(s, 0) + w
        return cls(tuple((s, w) for s, w in merged.items() if w != 0))

    @classmethod
    def pure(cls, seq: SearchSequence) -> "MixedSearchStrategy":
        return cls(((seq, Fraction(1)),))

    @property
    def sequences(self) -> list[SearchSequence]:
        return [s for s, _ in self.support]

    @property
    def weights(self) -> list[Scalar]:
        return [w for _, w in self.support]
