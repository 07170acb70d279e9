"""Curvature-seeded region growing over the k-NN graph.

The flattest (lowest-curvature) unassigned point opens a region and the
region flood-fills breadth-first through the k-NN graph. Two angular
criteria steer the growth:

* a neighbor joins the region when its normal deviates from the *admitting
  seed's* normal by less than ``theta_th`` degrees (local smoothness);
* a joined point becomes a seed itself only when its normal stays within
  ``t_th`` degrees of the region's *first* seed normal, so the region keeps
  the overall orientation it started with instead of drifting.

Growth repeats until every point belongs to some region (possibly a
singleton). Size filtering into fracture / non-fracture classes is a
separate, explicit step.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .cloud import PointCloud
from .features import LocalFeatures
from .neighbors import NeighborIndex

DEFAULT_K = 30
DEFAULT_THETA_TH = 6.0
DEFAULT_T_TH = 20.0
DEFAULT_MIN_REGION_SIZE = 100


@dataclass
class GrowParams:
    """Tuning knobs for region growth.

    k : shared neighbor count for features and growth
    theta_th : membership threshold, degrees; admits a neighbor whose normal
        deviates less than this from the admitting seed's normal
    t_th : seed-promotion threshold, degrees, measured against the region's
        first seed normal
    min_region_size : regions must exceed this point count to classify as
        fractures
    """

    k: int = DEFAULT_K
    theta_th: float = DEFAULT_THETA_TH
    t_th: float = DEFAULT_T_TH
    min_region_size: int = DEFAULT_MIN_REGION_SIZE

    def validate(self) -> None:
        """Range-check the parameters; call before production runs."""
        if self.k < 3:
            raise ValueError("k must be >= 3")
        if not 0.0 < self.theta_th < 90.0:
            raise ValueError("theta_th must lie in (0, 90) degrees")
        if not 0.0 < self.t_th < 90.0:
            raise ValueError("t_th must lie in (0, 90) degrees")
        if self.min_region_size < 1:
            raise ValueError("min_region_size must be >= 1")


class TraceRow(NamedTuple):
    """One admission event from a growth run (debug artifact)."""

    step: int
    region_id: int
    point: int
    admitting_seed: int
    angle_to_seed_deg: float
    angle_to_ref_deg: float


@dataclass(frozen=True)
class Segmentation:
    """Partition of point indices into regions plus degenerate leftovers.

    regions : point-index arrays in admission order, one per region, in
        creation order
    seed_indices : (R,) the point that opened each region
    seed_normals : (R, 3) the reference normal of each region's first seed
    unassigned : indices of degenerate points that never joined any region
    trace : admission log when growth ran with ``collect_trace=True``
    """

    regions: list[np.ndarray]
    seed_indices: np.ndarray
    seed_normals: np.ndarray
    unassigned: np.ndarray
    trace: Optional[list[TraceRow]] = field(default=None, compare=False)

    def labels(self, n_points: int) -> np.ndarray:
        """Region id per point; -1 for unassigned points."""
        out = np.full(n_points, -1, dtype=np.int64)
        for rid, region in enumerate(self.regions):
            out[region] = rid
        return out


def _angles_deg(vectors: np.ndarray, reference: np.ndarray) -> np.ndarray:
    dots = np.clip(vectors @ reference, -1.0, 1.0)
    return np.degrees(np.arccos(dots))


def grow_regions(
    cloud: PointCloud,
    features: LocalFeatures,
    index: NeighborIndex,
    params: GrowParams,
    workers: int = 1,
    collect_trace: bool = False,
) -> Segmentation:
    """Segment the cloud into regions of consistent surface orientation.

    Deterministic for identical inputs: seeds are chosen by (curvature,
    index), neighbors are visited in ascending (distance, index) order, and
    the queue is FIFO, so the output does not depend on ``workers``.
    """
    n = len(cloud)
    if len(features) != n:
        raise ValueError(
            f"features cover {len(features)} points but the cloud has {n}"
        )

    nbrs = index.knn_array(params.k, workers=workers)
    normals = features.normals
    assigned = features.degenerate.copy()
    unassigned = np.flatnonzero(features.degenerate)

    # Pre-sorting by (curvature, index) makes each region's starting point the
    # minimum-curvature point still unassigned at that moment.
    seed_order = np.lexsort((np.arange(n), features.curvatures))

    regions: list[np.ndarray] = []
    seed_indices: list[int] = []
    seed_normals: list[np.ndarray] = []
    trace: Optional[list[TraceRow]] = [] if collect_trace else None
    step = 0

    for start in seed_order:
        if assigned[start]:
            continue
        start = int(start)
        rid = len(regions)
        assigned[start] = True
        ref_normal = normals[start]
        members = [np.array([start], dtype=np.int64)]
        queue = deque([start])
        if trace is not None:
            trace.append(TraceRow(step, rid, start, start, 0.0, 0.0))
            step += 1

        while queue:
            seed = queue.popleft()
            seed_normal = normals[seed]
            cand = nbrs[seed]
            cand = cand[~assigned[cand]]
            if cand.size == 0:
                continue
            seed_angles = _angles_deg(normals[cand], seed_normal)
            admitted = cand[seed_angles < params.theta_th].astype(np.int64)
            if admitted.size == 0:
                continue
            assigned[admitted] = True
            members.append(admitted)
            ref_angles = _angles_deg(normals[admitted], ref_normal)
            queue.extend(admitted[ref_angles < params.t_th].tolist())
            if trace is not None:
                kept_angles = seed_angles[seed_angles < params.theta_th]
                for pt, a_seed, a_ref in zip(
                    admitted.tolist(), kept_angles.tolist(), ref_angles.tolist()
                ):
                    trace.append(TraceRow(step, rid, pt, seed, a_seed, a_ref))
                    step += 1

        regions.append(np.concatenate(members))
        seed_indices.append(start)
        seed_normals.append(ref_normal)

    total = sum(r.size for r in regions) + unassigned.size
    if not (assigned.all() and total == n):
        raise AssertionError("segmentation did not partition the point indices")

    return Segmentation(
        regions=regions,
        seed_indices=np.asarray(seed_indices, dtype=np.int64),
        seed_normals=(
            np.asarray(seed_normals, dtype=np.float64)
            if seed_normals
            else np.empty((0, 3))
        ),
        unassigned=unassigned,
        trace=trace,
    )


def classify_regions(
    seg: Segmentation, min_region_size: int
) -> tuple[list[np.ndarray], np.ndarray]:
    """Split regions into fracture candidates and non-fracture residue.

    Regions with strictly more than ``min_region_size`` points keep their
    creation order and become fractures; everything else (small regions and
    degenerate points) pools into the residue.
    """
    fractures: list[np.ndarray] = []
    residue: list[np.ndarray] = [seg.unassigned]
    for region in seg.regions:
        if region.size > min_region_size:
            fractures.append(region)
        else:
            residue.append(region)
    leftover = np.sort(np.concatenate(residue)) if residue else np.empty(0, np.int64)
    return fractures, leftover
