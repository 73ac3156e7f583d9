"""Golden metric vector generator backed by the canonical reference scorer."""

from .harness import (
    GoldenVector,
    Scorer,
    ScorerUnavailableError,
    load_scorer,
    read_pairs,
    regenerate_goldens,
    score_pairs,
)

__all__ = [
    "GoldenVector",
    "Scorer",
    "ScorerUnavailableError",
    "load_scorer",
    "read_pairs",
    "regenerate_goldens",
    "score_pairs",
]
