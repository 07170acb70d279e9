"""Point cloud container shared by every stage of the pipeline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ORIGIN = (0.0, 0.0, 0.0)


def as_point(p) -> np.ndarray:
    """Coerce an (x, y, z) triple to a read-only float64 array."""
    arr = np.array(p, dtype=np.float64).reshape(3)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"point has non-finite coordinates: {arr}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class PointCloud:
    """Immutable 3D points plus the scanner position they were acquired from.

    points : (N, 3) float64 array, meters. Point order is stable and
        index-addressable; every later stage refers to points by row index.
    viewpoint : (3,) float64 array, the scanner optical center. Used to
        orient estimated normals toward the instrument.
    crs_note : free-text tag recording the axis convention. The orientation
        formulas assume y = north, x = east, z = up.
    """

    points: np.ndarray
    viewpoint: np.ndarray
    crs_note: str = ""

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64, order="C")
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError(f"points must have shape (N, 3), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points contain non-finite coordinates")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "viewpoint", as_point(self.viewpoint))

    def __len__(self) -> int:
        return self.points.shape[0]
