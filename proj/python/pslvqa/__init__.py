"""Probabilistic soft logic engine for visual question answering."""

from ._core import (
    PslError,
    answer,
    dump_grounding,
    extract,
    grid_oracle,
    infer,
    learn,
    luk_and,
    luk_not,
    luk_or,
    similarity,
)

__all__ = [
    "PslError",
    "answer",
    "dump_grounding",
    "extract",
    "grid_oracle",
    "infer",
    "learn",
    "luk_and",
    "luk_not",
    "luk_or",
    "similarity",
]
