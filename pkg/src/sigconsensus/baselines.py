"""Alternative threshold criteria computed on the raw gallery similarity matrix.

None of these apply consensus filtering or an offset; they exist for
head-to-head comparison with the consensus threshold.
"""
from __future__ import annotations

import math

import numpy as np

from .core import EmptyMatrix, SimilarityMatrix, mean_std

BASELINE_STRATEGIES = ("max", "min", "mean", "ci")


def _entries(matrix) -> np.ndarray:
    values = matrix.entries if isinstance(matrix, SimilarityMatrix) else np.asarray(matrix, dtype=np.float64)
    if values.size == 0:
        raise EmptyMatrix("threshold of an empty matrix is undefined")
    return values.ravel()


def threshold_max(matrix) -> float:
    return float(_entries(matrix).max())


def threshold_min(matrix) -> float:
    return float(_entries(matrix).min())


def threshold_mean(matrix) -> float:
    return mean_std(_entries(matrix))[0]


def threshold_confidence_interval(matrix, alpha: float) -> float:
    """Lower confidence bound ``mean - std / sqrt(m) * alpha`` over all raw entries.

    Population std (divisor m). With ``alpha >= 0`` the result never exceeds
    :func:`threshold_mean`, since both share the same mean computation.
    """
    values = _entries(matrix)
    mu, sigma = mean_std(values)
    return mu - (sigma / math.sqrt(values.size)) * alpha


def baseline_threshold(strategy: str, matrix, alpha: float) -> float:
    if strategy == "max":
        return threshold_max(matrix)
    if strategy == "min":
        return threshold_min(matrix)
    if strategy == "mean":
        return threshold_mean(matrix)
    if strategy == "ci":
        return threshold_confidence_interval(matrix, alpha)
    raise ValueError(f"unknown baseline strategy {strategy!r}; expected one of {BASELINE_STRATEGIES}")
