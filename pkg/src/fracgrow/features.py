"""Per-point surface normals and curvature from neighborhood covariance.

For every point, the covariance of the point plus its k nearest neighbors is
eigen-decomposed. The eigenvector of the smallest eigenvalue, oriented toward
the scan viewpoint, is the local surface normal; the smallest eigenvalue's
share of the total, ``lam0 / (lam0 + lam1 + lam2)``, is the local curvature
(0 on a perfect plane, 1/3 for fully isotropic scatter).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .cloud import PointCloud
from .neighbors import NeighborIndex

# Neighborhoods whose covariance trace falls below this (in m^2) are a single
# coincident spot; those with lam1/lam2 below the rank ratio are collinear.
# Both get flagged degenerate instead of aborting the pipeline.
DEGENERATE_TRACE = 1e-18
DEGENERATE_RANK_RATIO = 1e-12

WORST_CURVATURE = 1.0 / 3.0

_CHUNK_ROWS = 65536


class EigenDecomp(NamedTuple):
    """Ascending eigenvalues and the matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray   # (3,)
    eigenvectors: np.ndarray  # (3, 3); column i pairs with eigenvalues[i]


@dataclass(frozen=True)
class LocalFeatures:
    """Per-point local geometry, one row per cloud point.

    normals : (N, 3) unit vectors, oriented toward the viewpoint
    curvatures : (N,) values in [0, 1/3]
    degenerate : (N,) bool; True rows carry placeholder normal (0, 0, 1) and
        curvature 1/3 and are excluded from seeding and growth
    k : neighbor count the features were computed with
    """

    normals: np.ndarray
    curvatures: np.ndarray
    degenerate: np.ndarray
    k: int

    def __len__(self) -> int:
        return self.normals.shape[0]


def _canonical_signs(vecs: np.ndarray) -> np.ndarray:
    """Flip eigenvector columns so the largest-magnitude component is positive.

    Ties on magnitude resolve to the first such component, making the sign
    choice deterministic for any input.
    """
    comp = np.argmax(np.abs(vecs), axis=-2)
    picked = np.take_along_axis(vecs, comp[..., None, :], axis=-2)
    return np.where(picked < 0.0, -vecs, vecs)


def _eigh_canonical(mats: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batched symmetric eigen-decomposition with deterministic signs."""
    w, v = np.linalg.eigh(mats)
    return w, _canonical_signs(v)


def eig_sym3(mat) -> EigenDecomp:
    """Eigen-decomposition of a symmetric 3x3 matrix with deterministic output.

    Only the lower triangle is read. Eigenvalues come back ascending and each
    eigenvector is sign-flipped so its largest-magnitude component is
    positive (ties resolved by the first such component).
    """
    m = np.asarray(mat, dtype=np.float64)
    if m.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    w, v = _eigh_canonical(m)
    return EigenDecomp(w, v)


def _neighborhood_covariances(samples: np.ndarray) -> np.ndarray:
    """Covariance matrices of (n, s, 3) sample stacks, one per row."""
    centered = samples - samples.mean(axis=1, keepdims=True)
    x = centered[:, :, 0]
    y = centered[:, :, 1]
    z = centered[:, :, 2]
    cov = np.empty((samples.shape[0], 3, 3), dtype=np.float64)
    cov[:, 0, 0] = np.mean(x * x, axis=1)
    cov[:, 1, 1] = np.mean(y * y, axis=1)
    cov[:, 2, 2] = np.mean(z * z, axis=1)
    cov[:, 0, 1] = cov[:, 1, 0] = np.mean(x * y, axis=1)
    cov[:, 0, 2] = cov[:, 2, 0] = np.mean(x * z, axis=1)
    cov[:, 1, 2] = cov[:, 2, 1] = np.mean(y * z, axis=1)
    return cov


def compute_local_features(
    cloud: PointCloud,
    index: NeighborIndex,
    k: int,
    workers: int = 1,
) -> LocalFeatures:
    """Estimate normal and curvature for every point of the cloud.

    Parameters
    ----------
    cloud : the point cloud; its viewpoint orients the normals
    index : exact k-NN index built over the same cloud
    k : neighbor count; the covariance uses the point plus its k nearest
        neighbors (k + 1 samples)
    workers : threads for the neighbor queries; the output is identical for
        every value

    Returns
    -------
    LocalFeatures with one row per point, in point order.
    """
    n = len(cloud)
    if k < 3:
        raise ValueError("k must be >= 3 for a stable covariance")
    if k > n - 1:
        raise ValueError(f"k={k} exceeds the {n - 1} available neighbors")

    nbrs = index.knn_array(k, workers=workers)
    points = cloud.points
    normals = np.empty((n, 3), dtype=np.float64)
    curvatures = np.empty(n, dtype=np.float64)
    degenerate = np.empty(n, dtype=bool)

    for lo in range(0, n, _CHUNK_ROWS):
        hi = min(n, lo + _CHUNK_ROWS)
        own = points[lo:hi]
        samples = np.concatenate((own[:, None, :], points[nbrs[lo:hi]]), axis=1)
        cov = _neighborhood_covariances(samples)
        w, v = _eigh_canonical(cov)

        trace = w.sum(axis=1)
        lam2 = np.maximum(w[:, 2], 0.0)
        degen = (trace < DEGENERATE_TRACE) | (w[:, 1] <= DEGENERATE_RANK_RATIO * lam2)

        with np.errstate(divide="ignore", invalid="ignore"):
            sigma = np.maximum(w[:, 0], 0.0) / trace

        normal = v[:, :, 0]
        # Orient toward the viewpoint; a dot product of exactly zero keeps
        # the canonical sign.
        toward = cloud.viewpoint[None, :] - own
        flip = np.einsum("ij,ij->i", normal, toward) < 0.0
        normal[flip] = -normal[flip]

        normal[degen] = (0.0, 0.0, 1.0)
        sigma[degen] = WORST_CURVATURE

        normals[lo:hi] = normal
        curvatures[lo:hi] = sigma
        degenerate[lo:hi] = degen

    for arr in (normals, curvatures, degenerate):
        arr.flags.writeable = False
    return LocalFeatures(normals=normals, curvatures=curvatures, degenerate=degenerate, k=k)
