"""Hot numeric kernels.

Each kernel has a numba ``@njit`` implementation and a pure-numpy one with
identical semantics. The numba path is used when numba imports cleanly and
``CMAES_SOP_DISABLE_NUMBA`` is unset (or ``0``/empty).
"""

from __future__ import annotations

import os

import numpy as np

_DISABLE_ENV = "CMAES_SOP_DISABLE_NUMBA"


def _numba_requested() -> bool:
    return os.environ.get(_DISABLE_ENV, "").strip().lower() in ("", "0", "false", "no")


try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and _numba_requested()


def nearest_index_numpy(queries: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Index of the Euclidean-nearest point for each query row.

    Ties resolve to the lowest point index.
    """
    out = np.empty(queries.shape[0], dtype=np.int64)
    # chunk so a (chunk, L, d) temporary stays small
    step = max(1, 2_000_000 // max(1, points.shape[0] * points.shape[1]))
    for start in range(0, queries.shape[0], step):
        q = queries[start : start + step]
        diff = q[:, None, :] - points[None, :, :]
        out[start : start + step] = np.argmin(np.sum(diff * diff, axis=2), axis=1)
    return out


def _nearest_index_py(queries, points):  # numba source
    n = queries.shape[0]
    npts = points.shape[0]
    dim = points.shape[1]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        best = np.inf
        arg = 0
        for j in range(npts):
            acc = 0.0
            for d in range(dim):
                t = queries[i, d] - points[j, d]
                acc += t * t
            if acc < best:
                best = acc
                arg = j
        out[i] = arg
    return out


def facet_gap_numpy(queries: np.ndarray, points: np.ndarray, a: int, b: int) -> np.ndarray:
    """For each query, squared distance to the nearest point other than ``a``/``b``
    minus squared distance to ``a``.

    Positive values mean the query is strictly closer to ``a`` than to every
    point outside the pair.
    """
    da = np.sum((queries - points[a]) ** 2, axis=1)
    mask = np.ones(points.shape[0], dtype=bool)
    mask[[a, b]] = False
    others = points[mask]
    if others.shape[0] == 0:
        return np.full(queries.shape[0], np.inf)
    best = np.full(queries.shape[0], np.inf)
    for p in others:
        best = np.minimum(best, np.sum((queries - p) ** 2, axis=1))
    return best - da


def _facet_gap_py(queries, points, a, b):  # numba source
    n = queries.shape[0]
    npts = points.shape[0]
    dim = points.shape[1]
    out = np.empty(n)
    for i in range(n):
        da = 0.0
        for d in range(dim):
            t = queries[i, d] - points[a, d]
            da += t * t
        best = np.inf
        for j in range(npts):
            if j == a or j == b:
                continue
            acc = 0.0
            for d in range(dim):
                t = queries[i, d] - points[j, d]
                acc += t * t
            if acc < best:
                best = acc
        out[i] = best - da
    return out


def encode_blocks_numpy(batch, flat, col_off, dims, pt_off, counts):
    """Snap every point-set block of each row of ``batch`` in place.

    Set ``s`` covers columns ``col_off[s]:col_off[s] + dims[s]``; its points are
    ``flat[pt_off[s]:pt_off[s] + counts[s] * dims[s]]`` in row-major order.
    """
    for s in range(col_off.shape[0]):
        c, d = col_off[s], dims[s]
        pts = flat[pt_off[s] : pt_off[s] + counts[s] * d].reshape(counts[s], d)
        batch[:, c : c + d] = pts[nearest_index_numpy(batch[:, c : c + d], pts)]


def _encode_blocks_py(batch, flat, col_off, dims, pt_off, counts):  # numba source
    for i in range(batch.shape[0]):
        for s in range(col_off.shape[0]):
            c = col_off[s]
            d = dims[s]
            base = pt_off[s]
            best = np.inf
            arg = 0
            for j in range(counts[s]):
                acc = 0.0
                for e in range(d):
                    t = batch[i, c + e] - flat[base + j * d + e]
                    acc += t * t
                if acc < best:
                    best = acc
                    arg = j
            for e in range(d):
                batch[i, c + e] = flat[base + arg * d + e]


if HAS_NUMBA:
    encode_blocks_numba = numba.njit(cache=True)(_encode_blocks_py)
    nearest_index_numba = numba.njit(cache=True)(_nearest_index_py)
    facet_gap_numba = numba.njit(cache=True)(_facet_gap_py)
else:  # pragma: no cover
    encode_blocks_numba = None
    nearest_index_numba = None
    facet_gap_numba = None


def nearest_index(queries: np.ndarray, points: np.ndarray) -> np.ndarray:
    queries = np.ascontiguousarray(queries, dtype=np.float64)
    points = np.ascontiguousarray(points, dtype=np.float64)
    if USE_NUMBA:
        return nearest_index_numba(queries, points)
    return nearest_index_numpy(queries, points)


def facet_gap(queries: np.ndarray, points: np.ndarray, a: int, b: int) -> np.ndarray:
    queries = np.ascontiguousarray(queries, dtype=np.float64)
    points = np.ascontiguousarray(points, dtype=np.float64)
    if USE_NUMBA:
        return facet_gap_numba(queries, points, int(a), int(b))
    return facet_gap_numpy(queries, points, a, b)


def encode_blocks(batch, flat, col_off, dims, pt_off, counts) -> None:
    if USE_NUMBA:
        encode_blocks_numba(batch, flat, col_off, dims, pt_off, counts)
    else:
        encode_blocks_numpy(batch, flat, col_off, dims, pt_off, counts)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
