"""End-to-end extraction: index -> features -> grow -> classify -> summarize."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cloud import PointCloud
from .features import LocalFeatures, compute_local_features
from .growing import GrowParams, Segmentation, classify_regions, grow_regions
from .neighbors import build_index
from .orientation import FractureRegion, summarize_regions


class StageFailure(RuntimeError):
    """Wraps an error with the pipeline stage it occurred in."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class ExtractResult:
    """Everything one extraction run produced."""

    cloud: PointCloud
    features: LocalFeatures
    segmentation: Segmentation
    fractures: list[FractureRegion]
    labels: np.ndarray                 # fracture id per point, -1 outside
    skipped_regions: int
    timings: dict[str, float] = field(default_factory=dict)  # seconds per stage

    @property
    def fracture_count(self) -> int:
        return len(self.fractures)

    @property
    def mean_fracture_size(self) -> float:
        if not self.fractures:
            return 0.0
        return float(np.mean([f.point_indices.size for f in self.fractures]))


def _run(stage: str, timings: dict[str, float], fn, *args, **kwargs):
    start = time.perf_counter()
    try:
        result = fn(*args, **kwargs)
    except Exception as exc:
        raise StageFailure(stage, exc) from exc
    timings[stage] = time.perf_counter() - start
    return result


def extract_fractures(
    cloud: PointCloud,
    params: Optional[GrowParams] = None,
    workers: int = 1,
    collect_trace: bool = False,
) -> ExtractResult:
    """Run the full fracture-extraction pipeline on an in-memory cloud."""
    if params is None:
        params = GrowParams()
    params.validate()

    timings: dict[str, float] = {}
    total_start = time.perf_counter()

    index = _run("index", timings, build_index, cloud)
    features = _run(
        "features", timings, compute_local_features, cloud, index, params.k, workers
    )
    seg = _run(
        "grow",
        timings,
        grow_regions,
        cloud,
        features,
        index,
        params,
        workers,
        collect_trace,
    )
    fracture_sets, _residue = _run(
        "classify", timings, classify_regions, seg, params.min_region_size
    )
    fractures, skipped = _run("summarize", timings, summarize_regions, cloud, fracture_sets)

    labels = np.full(len(cloud), -1, dtype=np.int64)
    for region in fractures:
        labels[region.point_indices] = region.id
    timings["total"] = time.perf_counter() - total_start

    return ExtractResult(
        cloud=cloud,
        features=features,
        segmentation=seg,
        fractures=fractures,
        labels=labels,
        skipped_regions=skipped,
        timings=timings,
    )
