"""Optimal pure Searcher strategies in box search games."""

from .core import (
    BoxParams,
    GameSpec,
    HiderStrategy,
    MixedSearchStrategy,
    SearchSequence,
    ValidationError,
    canonicalize,
    validate_game,
)

__all__ = [
    "BoxParams",
    "GameSpec",
    "HiderStrategy",
    "MixedSearchStrategy",
    "SearchSequence",
    "ValidationError",
    "canonicalize",
    "validate_game",
]

__version__ = "0.1.0"
