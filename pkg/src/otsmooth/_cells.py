"""Compiled cell assignment for noise on the hypercube [-1, 1]^d.

Assigning a point to ``argmax_i x @ y_i + h_i`` costs O(n) per point. For
low dimensions the cube is cut into a regular grid of buckets; per bucket
we keep only the cells whose hyperplane can reach the upper envelope
somewhere inside it. A linear function attains its extremes over a box at
the corners, so cell ``i`` is dropped from a bucket only when its corner
maximum is below the best corner minimum of some other cell, in which case
that cell dominates it everywhere in the bucket. Candidates are stored in
ascending index order, which keeps the lowest-index tie-break of the
brute-force scan.
"""

import itertools

import numba
import numpy as np

# buckets per axis by dimension; larger d falls back to the full scan
_GRID = {1: 256, 2: 32, 3: 12}
_MIN_POINTS_FOR_BUCKETS = 4096
_SLACK = 1e-9


@numba.njit(cache=True, nogil=True)
def _assign_full(X, codes, heights, out):
    n, d = codes.shape
    for j in range(X.shape[0]):
        best = -np.inf
        arg = 0
        for i in range(n):
            s = heights[i]
            for k in range(d):
                s += X[j, k] * codes[i, k]
            if s > best:
                best = s
                arg = i
        out[j] = arg


@numba.njit(cache=True, nogil=True)
def _assign_bucketed(X, codes, heights, grid, indptr, indices, out):
    n, d = codes.shape
    for j in range(X.shape[0]):
        b = 0
        for k in range(d):
            q = int((X[j, k] + 1.0) * 0.5 * grid)
            if q >= grid:
                q = grid - 1
            elif q < 0:
                q = 0
            b = b * grid + q
        best = -np.inf
        arg = 0
        for p in range(indptr[b], indptr[b + 1]):
            i = indices[p]
            s = heights[i]
            for k in range(d):
                s += X[j, k] * codes[i, k]
            if s > best:
                best = s
                arg = i
        out[j] = arg


def _bucket_candidates(codes, heights, grid):
    d = codes.shape[1]
    edges = np.linspace(-1.0, 1.0, grid + 1)
    cell = np.array(list(itertools.product(range(grid), repeat=d)))
    offsets = np.array(list(itertools.product((0, 1), repeat=d)))
    corners = edges[cell[:, None, :] + offsets[None, :, :]]
    vals = corners @ codes.T + heights
    upper = vals.max(axis=1)
    lower = vals.min(axis=1).max(axis=1)
    mask = upper >= (lower - _SLACK)[:, None]
    indptr = np.zeros(mask.shape[0] + 1, dtype=np.int64)
    np.cumsum(mask.sum(axis=1), out=indptr[1:])
    indices = np.nonzero(mask)[1].astype(np.int64)
    return indptr, indices


def assign_cells(X, codes, heights):
    """Cell index of every row of ``X`` (assumed to lie in [-1, 1]^d)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    codes = np.ascontiguousarray(codes, dtype=np.float64)
    heights = np.ascontiguousarray(heights, dtype=np.float64)
    out = np.empty(X.shape[0], dtype=np.int64)
    d = codes.shape[1]
    grid = _GRID.get(d)
    inside = X.shape[0] and np.all(np.abs(X) <= 1.0)
    if grid is None or X.shape[0] < _MIN_POINTS_FOR_BUCKETS or not inside:
        _assign_full(X, codes, heights, out)
        return out
    indptr, indices = _bucket_candidates(codes, heights, grid)
    _assign_bucketed(X, codes, heights, grid, indptr, indices, out)
    return out
