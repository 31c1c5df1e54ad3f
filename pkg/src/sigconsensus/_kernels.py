"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The backend is chosen once at import time. Set ``SIGCONSENSUS_DISABLE_NUMBA=1``
to force the numpy path (also used automatically when numba is missing).

Both backends compute every output entry with a summation order that does
not depend on how many rows/columns are in the batch, so a 1x1 call and the
matching entry of a larger call are bit-identical within a backend. Across
backends results agree to a few ulps.
"""
from __future__ import annotations

import os

import numpy as np

_FLAG = "SIGCONSENSUS_DISABLE_NUMBA"


def _numba_requested() -> bool:
    return os.environ.get(_FLAG, "").strip().lower() not in ("1", "true", "yes", "on")


def pairwise_cosine_numpy(rows: np.ndarray, cols: np.ndarray):
    """Return (similarities, row_norms, col_norms); similarities unclamped-safe."""
    row_norms = np.sqrt((rows * rows).sum(axis=1))
    col_norms = np.sqrt((cols * cols).sum(axis=1))
    dots = (rows[:, None, :] * cols[None, :, :]).sum(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        sims = dots / (row_norms[:, None] * col_norms[None, :])
    np.clip(sims, -1.0, 1.0, out=sims)
    return sims, row_norms, col_norms


def _pairwise_cosine_loops(rows, cols):
    r, n = rows.shape
    c = cols.shape[0]
    row_norms = np.empty(r)
    col_norms = np.empty(c)
    for u in range(r):
        s = 0.0
        for k in range(n):
            s += rows[u, k] * rows[u, k]
        row_norms[u] = np.sqrt(s)
    for v in range(c):
        s = 0.0
        for k in range(n):
            s += cols[v, k] * cols[v, k]
        col_norms[v] = np.sqrt(s)
    sims = np.empty((r, c))
    for u in range(r):
        for v in range(c):
            s = 0.0
            for k in range(n):
                s += rows[u, k] * cols[v, k]
            denom = row_norms[u] * col_norms[v]
            if denom == 0.0:
                sims[u, v] = np.nan
                continue
            x = s / denom
            if x > 1.0:
                x = 1.0
            elif x < -1.0:
                x = -1.0
            sims[u, v] = x
    return sims, row_norms, col_norms


try:
    if not _numba_requested():
        raise ImportError("numba disabled via " + _FLAG)
    import numba

    pairwise_cosine_numba = numba.njit(cache=True, nogil=True)(_pairwise_cosine_loops)
    BACKEND = "numba"
except ImportError:
    pairwise_cosine_numba = None
    BACKEND = "numpy"


def pairwise_cosine(rows: np.ndarray, cols: np.ndarray):
    """Dispatch to the active backend. Inputs must be C-contiguous float64 2-D arrays."""
    if pairwise_cosine_numba is not None:
        return pairwise_cosine_numba(rows, cols)
    return pairwise_cosine_numpy(rows, cols)
