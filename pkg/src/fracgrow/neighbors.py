"""Exact k-nearest-neighbor queries over a point cloud.

A scipy kd-tree proposes candidate neighbors; distances are then recomputed
with numpy and the candidates re-sorted by (distance, point index). The
result is bit-identical to a brute-force scan, including the order of
duplicate-coordinate ties, for any number of query threads.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .cloud import PointCloud

# A row is certified complete when its k-th selected distance sits below the
# largest fetched distance by more than this relative margin; every tie at
# the k-th distance is then guaranteed to have been fetched.
_TIE_MARGIN = 1e-12

_CHUNK_ROWS = 65536


class NeighborIndex:
    """Immutable exact k-NN index over one cloud's point positions.

    Queries never return the query point itself; ties on distance are broken
    by ascending point index. Safe for concurrent read-only use once built.
    """

    def __init__(self, cloud: PointCloud):
        if len(cloud) == 0:
            raise ValueError("cannot build an index over an empty cloud")
        self._points = cloud.points
        self._tree = cKDTree(self._points)

    @property
    def n_points(self) -> int:
        return self._points.shape[0]

    def knn(self, query_index: int, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Indices and distances of the k nearest neighbors of one point.

        Returns min(k, N-1) neighbors in ascending (distance, index) order,
        excluding ``query_index`` itself.
        """
        n = self.n_points
        if not 0 <= query_index < n:
            raise IndexError(f"query index {query_index} out of range 0..{n - 1}")
        if k < 1:
            raise ValueError("k must be >= 1")
        k_eff = min(k, n - 1)
        if k_eff == 0:
            return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64)

        q = self._points[query_index]
        m = min(n, k_eff + 9)
        while True:
            d_raw, idx = self._tree.query(q, k=m)
            idx = np.atleast_1d(idx)
            d_raw = np.atleast_1d(d_raw)
            cand = idx[idx != query_index]
            dist = np.sqrt(((self._points[cand] - q) ** 2).sum(axis=1))
            order = np.lexsort((cand, dist))[:k_eff]
            sel_idx, sel_dist = cand[order], dist[order]
            if m == n or (
                sel_idx.size == k_eff
                and sel_dist[-1] < d_raw[-1] * (1.0 - _TIE_MARGIN)
            ):
                return sel_idx.astype(np.int64), sel_dist
            m = min(n, 2 * m)

    def knn_array(self, k: int, workers: int = 1) -> np.ndarray:
        """Neighbor indices for every point at once, shape (N, min(k, N-1)).

        Row i holds the neighbors of point i in ascending (distance, index)
        order. Results are independent of ``workers``.
        """
        n = self.n_points
        if k < 1:
            raise ValueError("k must be >= 1")
        k_eff = min(k, n - 1)
        out = np.empty((n, k_eff), dtype=np.int32)
        if k_eff == 0:
            return out

        m = min(n, k_eff + 9)
        for lo in range(0, n, _CHUNK_ROWS):
            hi = min(n, lo + _CHUNK_ROWS)
            rows = np.arange(lo, hi)
            d_raw, idx = self._tree.query(self._points[lo:hi], k=m, workers=workers)
            if m == 1:
                d_raw, idx = d_raw[:, None], idx[:, None]

            # Recompute distances in the brute-force metric, push the query
            # point itself to the back, and sort each row by (distance, index).
            nd = np.sqrt(
                ((self._points[idx] - self._points[lo:hi, None, :]) ** 2).sum(axis=2)
            )
            is_self = idx == rows[:, None]
            nd[is_self] = np.inf
            order = np.lexsort((idx, nd), axis=1)
            sel_idx = np.take_along_axis(idx, order[:, :k_eff], axis=1)
            sel_dist = np.take_along_axis(nd, order[:, :k_eff], axis=1)

            if m == n:
                certified = np.ones(hi - lo, dtype=bool)
            else:
                certified = is_self.any(axis=1) & (
                    sel_dist[:, -1] < d_raw[:, -1] * (1.0 - _TIE_MARGIN)
                )
            out[lo:hi] = sel_idx
            for r in rows[~certified]:
                out[r], _ = self.knn(int(r), k_eff)
        return out


def build_index(cloud: PointCloud) -> NeighborIndex:
    """Build the exact k-NN search structure for a cloud."""
    return NeighborIndex(cloud)
