"""Cosine similarity and gallery similarity matrices.

Similarity, not distance: larger values mean more alike, and every threshold
in the package accepts when ``score >= threshold``.
"""
from __future__ import annotations

import numpy as np

from . import _kernels
from .core import DegenerateVector, DimensionMismatch, EmptyMatrix, NonFiniteFeature, SimilarityMatrix


def _as_rows(vectors, name: str) -> np.ndarray:
    if isinstance(vectors, np.ndarray):
        arr = vectors
        if arr.ndim == 1:
            arr = arr[None, :]
    else:
        items = [np.asarray(v, dtype=np.float64) for v in vectors]
        if not items:
            raise EmptyMatrix(f"{name}: no vectors")
        n = items[0].shape
        for i, item in enumerate(items):
            if item.shape != n:
                raise DimensionMismatch(f"{name}[{i}]: shape {item.shape}, expected {n}")
        arr = np.stack(items)
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise EmptyMatrix(f"{name}: expected a non-empty list of vectors, got shape {arr.shape}")
    return np.ascontiguousarray(arr, dtype=np.float64)


def _cosine_block(rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    if rows.shape[1] != cols.shape[1]:
        raise DimensionMismatch(
            f"dimension mismatch: rows have {rows.shape[1]}, cols have {cols.shape[1]}")
    for name, arr in (("row", rows), ("column", cols)):
        finite = np.isfinite(arr).all(axis=1)
        if not finite.all():
            raise NonFiniteFeature(f"{name} vector {int(np.flatnonzero(~finite)[0])} has NaN or Inf")
    sims, row_norms, col_norms = _kernels.pairwise_cosine(rows, cols)
    bad = np.flatnonzero(row_norms == 0.0)
    if bad.size:
        raise DegenerateVector(f"row vector {int(bad[0])} has zero norm (position ({int(bad[0])}, *))")
    bad = np.flatnonzero(col_norms == 0.0)
    if bad.size:
        raise DegenerateVector(f"column vector {int(bad[0])} has zero norm (position (*, {int(bad[0])}))")
    if not np.all(np.isfinite(sims)):
        u, v = np.argwhere(~np.isfinite(sims))[0]
        raise DegenerateVector(f"non-finite similarity at position ({u}, {v})")
    return sims


def cosine_similarity(a, b) -> float:
    """Cosine of the angle between ``a`` and ``b``, clamped to [-1, 1].

    >>> cosine_similarity([1.0, 0.0], [0.0, 1.0])
    0.0
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1:
        raise DimensionMismatch("cosine_similarity takes two 1-D vectors")
    if a.shape != b.shape:
        raise DimensionMismatch(f"vector lengths differ: {a.shape[0]} vs {b.shape[0]}")
    if a.size == 0:
        raise DimensionMismatch("empty vectors")
    return float(_cosine_block(a[None, :], b[None, :])[0, 0])


def pairwise_matrix(rows, cols) -> SimilarityMatrix:
    """Similarity of every ``rows[u]`` against every ``cols[v]``.

    In enrollment ``rows`` is gallery-b and ``cols`` is gallery-a.
    """
    return SimilarityMatrix(_cosine_block(_as_rows(rows, "rows"), _as_rows(cols, "cols")))


def similarities_to_refs(probes, refs) -> np.ndarray:
    """Raw (n_probes, n_refs) similarity array, no SimilarityMatrix wrapping."""
    return _cosine_block(_as_rows(probes, "probes"), _as_rows(refs, "refs"))
