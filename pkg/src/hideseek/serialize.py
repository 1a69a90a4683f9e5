"""JSON game specs and report encoding.

A spec looks like ``{"boxes": [{"t": "2", "q": "1/5"}, ...], "k": [1, 1, 1], "r": "4/5"}``.
If ``q`` is omitted for every box, ``k`` and ``r`` are required and
q_i = 1 - r^(1/k_i).
"""

from __future__ import annotations

import hashlib
import json
from fractions import Fraction
from pathlib import Path

import mpmath

from .core import (
    GameSpec,
    HiderStrategy,
    MixedSearchStrategy,
    SearchSequence,
    ValidationError,
    format_scalar,
    parse_scalar,
    precision_mode,
)


def spec_from_dict(doc: dict, mode: str | None = None) -> GameSpec:
    if not isinstance(doc, dict) or "boxes" not in doc:
        raise ValidationError("spec must be an object with a 'boxes' list")
    boxes = doc["boxes"]
    if not isinstance(boxes, list) or not boxes:
        raise ValidationError("'boxes' must be a non-empty list")
    try:
        times = [b["t"] for b in boxes]
    except (TypeError, KeyError) as exc:
        raise ValidationError("every box needs a search time 't'") from exc
    has_q = ["q" in b for b in boxes]
    k, r = doc.get("k"), doc.get("r")
    if not any(has_q):
        if k is None or r is None:
            raise ValidationError("boxes without 'q' need 'k' and 'r'")
        return GameSpec.from_root(times, r, k, mode)
    if not all(has_q):
        raise ValidationError("give 'q' for every box or for none")
    return GameSpec.build(times, [b["q"] for b in boxes], k, r, mode)


def load_spec(path: str | Path, mode: str | None = None) -> GameSpec:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ValidationError(f"cannot read spec file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"spec file {path} is not valid JSON: {exc}") from exc
    return spec_from_dict(doc, precision_mode(mode))


def spec_to_dict(spec: GameSpec) -> dict:
    doc: dict = {"boxes": [{"t": format_scalar(b.search_time), "q": format_scalar(b.detection_prob)}
                           for b in spec.boxes]}
    if spec.has_root:
        doc["k"] = list(spec.root_exponents)
        doc["r"] = format_scalar(spec.common_root)
    return doc


def digest(doc) -> str:
    return hashlib.sha256(json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def parse_hider(text: str, n: int, mode: str | None = None) -> HiderStrategy:
    probs = [parse_scalar(x, mode) for x in text.split(",")]
    if len(probs) != n:
        raise ValidationError(f"hider strategy needs {n} entries, got {len(probs)}")
    return HiderStrategy(tuple(probs))


def parse_mixture(text: str, mode: str | None = None) -> MixedSearchStrategy:
    """``"(1,2):1/2; (2,1):1/2"`` -> mixed strategy."""
    pairs = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        seq, sep, weight = part.rpartition(":")
        if not sep:
            raise ValidationError(f"mixture entry {part!r} must look like 'SEQUENCE:WEIGHT'")
        pairs.append((SearchSequence.parse(seq), parse_scalar(weight, mode)))
    return MixedSearchStrategy.from_pairs(pairs)


def encode(value):
    """Make a report value JSON-ready: scalars become strings, boxes 1-based in sequences."""
    if isinstance(value, (bool, str)) or value is None:
        return value
    if isinstance(value, (int, Fraction, float, mpmath.mpf)):
        return format_scalar(value)
    if isinstance(value, SearchSequence):
        return value.format()
    if isinstance(value, HiderStrategy):
        return [encode(p) for p in value.probs]
    if isinstance(value, MixedSearchStrategy):
        return [{"sequence": s.format(), "weight": encode(w)} for s, w in value.support]
    if isinstance(value, dict):
        return {str(k): encode(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [encode(v) for v in value]
    raise TypeError(f"cannot encode {type(value).__name__}")
