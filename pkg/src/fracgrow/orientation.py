"""Plane fitting and orientation conventions for extracted regions.

A region's plane normal is the smallest-eigenvalue direction of the member
points' covariance (total least squares), reported on the upper hemisphere
(n_z >= 0). Dip direction / dip assume y = north, x = east, z = up; poles are
reported as trend / plunge and plotted with a lower-hemisphere equal-area
projection.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .cloud import PointCloud
from .features import DEGENERATE_RANK_RATIO, eig_sym3

logger = logging.getLogger(__name__)

UNIT_TOL = 1e-9


@dataclass(frozen=True)
class FractureRegion:
    """One extracted fracture face with its fitted plane and orientation."""

    id: int
    point_indices: np.ndarray
    centroid: np.ndarray
    plane_normal: np.ndarray      # unit, n_z >= 0
    dip_direction: float          # degrees, [0, 360)
    dip: float                    # degrees, [0, 90]
    pole_trend: float             # degrees, [0, 360)
    pole_plunge: float            # degrees, [0, 90]
    rms_plane_distance: float     # meters


def fit_plane(points) -> tuple[np.ndarray, np.ndarray, float]:
    """Total-least-squares plane through a set of points.

    Returns (unit normal with n_z >= 0, centroid, rms point-to-plane
    distance). Raises ValueError for fewer than 3 points or collinear input.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"points must have shape (N, 3), got {pts.shape}")
    if pts.shape[0] < 3:
        raise ValueError("plane fitting needs at least 3 points")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points contain non-finite coordinates")

    centroid = pts.mean(axis=0)
    centered = pts - centroid
    cov = centered.T @ centered / pts.shape[0]
    w, v = eig_sym3(cov)
    if w[2] <= 0.0 or w[1] <= DEGENERATE_RANK_RATIO * w[2]:
        raise ValueError("points are collinear; the plane is underdetermined")

    normal = _upper_hemisphere(v[:, 0])
    rms = float(np.sqrt(np.mean((centered @ normal) ** 2)))
    return normal, centroid, rms


def _upper_hemisphere(normal: np.ndarray) -> np.ndarray:
    """Resolve the plane's sign ambiguity: n_z >= 0, then n_y > 0, then n_x > 0."""
    n = normal.copy()
    if n[2] < 0.0:
        n = -n
    elif n[2] == 0.0:
        if n[1] < 0.0:
            n = -n
        elif n[1] == 0.0 and n[0] < 0.0:
            n = -n
    return n


def normal_to_dip(normal) -> tuple[float, float]:
    """Convert an upward unit normal to (dip direction, dip) in degrees.

    Dip direction is the compass azimuth of the steepest-descent vector
    (0 = north, 90 = east); dip is the inclination from horizontal.
    """
    n = np.asarray(normal, dtype=np.float64).reshape(3)
    norm = float(np.sqrt((n * n).sum()))
    if abs(norm - 1.0) > UNIT_TOL:
        raise ValueError(f"normal must be a unit vector, |n| = {norm!r}")
    nx, ny, nz = float(n[0]), float(n[1]), float(n[2])
    if nz < 0.0:
        raise ValueError("normal must point upward (n_z >= 0)")

    if nx == 0.0:
        dip_direction = 0.0 if ny >= 0.0 else 180.0
    elif nx > 0.0:
        dip_direction = 90.0 - math.degrees(math.atan(ny / nx))
    else:
        dip_direction = 270.0 - math.degrees(math.atan(ny / nx))

    horiz_sq = nx * nx + ny * ny
    if horiz_sq == 0.0:
        dip = 0.0
    else:
        dip = 90.0 - math.degrees(math.atan(abs(nz) / math.sqrt(horiz_sq)))
    return dip_direction % 360.0, dip


def dip_to_normal(dip_direction: float, dip: float) -> np.ndarray:
    """Upward unit normal of the plane with the given orientation."""
    dd = math.radians(dip_direction)
    di = math.radians(dip)
    return np.array(
        [
            math.sin(di) * math.sin(dd),
            math.sin(di) * math.cos(dd),
            math.cos(di),
        ]
    )


def pole_and_project(
    dip_direction: float, dip: float, net_radius: float = 1.0
) -> tuple[float, float, float, float]:
    """Pole of a plane and its lower-hemisphere equal-area plot position.

    Returns (trend, plunge, px, py); px/py are plot coordinates with north up
    and east right, scaled so the primitive circle has ``net_radius``.
    """
    if not 0.0 <= dip_direction < 360.0:
        raise ValueError("dip_direction must lie in [0, 360)")
    if not 0.0 <= dip <= 90.0:
        raise ValueError("dip must lie in [0, 90]")
    if net_radius <= 0.0:
        raise ValueError("net_radius must be positive")

    trend = (dip_direction + 180.0) % 360.0
    plunge = 90.0 - dip
    r = net_radius * math.sqrt(2.0) * math.sin(math.radians(90.0 - plunge) / 2.0)
    px = r * math.sin(math.radians(trend))
    py = r * math.cos(math.radians(trend))
    return trend, plunge, px, py


def summarize_regions(
    cloud: PointCloud, fractures: Sequence[np.ndarray] | Iterable[np.ndarray]
) -> tuple[list[FractureRegion], int]:
    """Fit a plane and orientation to each fracture point set.

    Ids are assigned 0..F-1 in input order over the regions that survive;
    degenerate (collinear) regions are logged, skipped, and counted via the
    second return value.
    """
    summaries: list[FractureRegion] = []
    skipped = 0
    for pos, indices in enumerate(fractures):
        indices = np.asarray(indices, dtype=np.int64)
        try:
            normal, centroid, rms = fit_plane(cloud.points[indices])
        except ValueError as exc:
            logger.warning("skipping degenerate region %d: %s", pos, exc)
            skipped += 1
            continue
        dip_direction, dip = normal_to_dip(normal)
        trend, plunge, _, _ = pole_and_project(dip_direction, dip)
        summaries.append(
            FractureRegion(
                id=len(summaries),
                point_indices=indices,
                centroid=centroid,
                plane_normal=normal,
                dip_direction=dip_direction,
                dip=dip,
                pole_trend=trend,
                pole_plunge=plunge,
                rms_plane_distance=rms,
            )
        )
    return summaries, skipped
