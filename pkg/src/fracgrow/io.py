"""Reading scanner exports and writing pipeline outputs.

ASCII XYZ and ASCII PLY come in; label/region CSV tables, a pole-scatter
SVG, and debug dumps go out. Writers format floats to 6 decimal places and
emit LF newlines, so identical inputs produce byte-identical files.
"""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .cloud import ORIGIN, PointCloud
from .features import LocalFeatures
from .growing import Segmentation, TraceRow
from .orientation import FractureRegion, pole_and_project

logger = logging.getLogger(__name__)

_XYZ_SUFFIXES = {".xyz", ".txt", ".pts", ".asc"}


class FileFormatError(ValueError):
    """A point-cloud file violates its declared format."""


def _sniff_format(path: Path) -> str:
    if path.suffix.lower() == ".ply":
        return "ply"
    if path.suffix.lower() in _XYZ_SUFFIXES:
        return "xyz"
    with open(path, "r", errors="replace") as handle:
        first = handle.readline().strip()
    return "ply" if first == "ply" else "xyz"


def load_points(path, fmt: str = "auto", viewpoint=ORIGIN) -> PointCloud:
    """Load a point cloud from ASCII XYZ or ASCII PLY.

    The file carries no viewpoint, so one must be supplied (default: the
    origin, matching a scanner-centered frame).
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such point-cloud file: {path}")
    if fmt == "auto":
        fmt = _sniff_format(path)
    if fmt == "xyz":
        points = _read_xyz(path)
    elif fmt == "ply":
        points = _read_ply(path)
    else:
        raise ValueError(f"unknown format {fmt!r}; expected auto, xyz, or ply")
    return PointCloud(points=points, viewpoint=viewpoint, crs_note=f"loaded from {path.name}")


def _parse_coords(parts: Sequence[str], path: Path, lineno: int) -> tuple[float, float, float]:
    try:
        x, y, z = float(parts[0]), float(parts[1]), float(parts[2])
    except ValueError:
        raise FileFormatError(
            f"{path}: line {lineno}: non-numeric coordinate"
        ) from None
    if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(z)):
        raise FileFormatError(f"{path}: line {lineno}: non-finite coordinate")
    return x, y, z


def _read_xyz(path: Path) -> np.ndarray:
    rows = []
    extra_fields = 0
    with open(path, "r") as handle:
        for lineno, line in enumerate(handle, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            parts = stripped.split()
            if len(parts) < 3:
                raise FileFormatError(
                    f"{path}: line {lineno}: expected 3 coordinates, got {len(parts)} fields"
                )
            if len(parts) > 3:
                extra_fields += 1
            rows.append(_parse_coords(parts, path, lineno))
    if extra_fields:
        logger.warning("%s: ignored trailing fields on %d lines", path, extra_fields)
    if not rows:
        raise FileFormatError(f"{path}: no points found")
    return np.asarray(rows, dtype=np.float64)


def _read_ply(path: Path) -> np.ndarray:
    with open(path, "r", errors="replace") as handle:
        lines = iter(enumerate(handle, start=1))

        lineno, first = next(lines, (0, ""))
        if first.strip() != "ply":
            raise FileFormatError(f"{path}: not a PLY file (missing 'ply' magic)")

        elements: list[tuple[str, int]] = []
        properties: dict[str, list[str]] = {}
        fmt_seen = False
        for lineno, line in lines:
            tokens = line.strip().split()
            if not tokens or tokens[0] == "comment":
                continue
            if tokens[0] == "format":
                if tokens[1] != "ascii":
                    raise FileFormatError(
                        f"{path}: {' '.join(tokens[1:])} PLY is not supported; export as ASCII"
                    )
                fmt_seen = True
            elif tokens[0] == "element":
                elements.append((tokens[1], int(tokens[2])))
                properties[tokens[1]] = []
            elif tokens[0] == "property":
                if not elements:
                    raise FileFormatError(f"{path}: line {lineno}: property before any element")
                properties[elements[-1][0]].append(tokens[-1])
            elif tokens[0] == "end_header":
                break
        else:
            raise FileFormatError(f"{path}: missing end_header")
        if not fmt_seen:
            raise FileFormatError(f"{path}: missing format declaration")

        vertex_counts = [count for name, count in elements if name == "vertex"]
        if not vertex_counts:
            raise FileFormatError(f"{path}: no vertex element declared")
        vertex_props = properties["vertex"]
        try:
            cols = [vertex_props.index(axis) for axis in ("x", "y", "z")]
        except ValueError:
            raise FileFormatError(
                f"{path}: vertex element lacks x/y/z properties (has {vertex_props})"
            ) from None

        rows = []
        for name, count in elements:
            for _ in range(count):
                lineno, line = next(lines, (lineno, None))
                if line is None:
                    raise FileFormatError(
                        f"{path}: unexpected end of file inside element '{name}'"
                    )
                if name != "vertex":
                    continue
                parts = line.split()
                if len(parts) < len(vertex_props):
                    raise FileFormatError(
                        f"{path}: line {lineno}: vertex record has "
                        f"{len(parts)} fields, expected {len(vertex_props)}"
                    )
                rows.append(_parse_coords([parts[c] for c in cols], path, lineno))

    if not rows:
        raise FileFormatError(f"{path}: no points found")
    return np.asarray(rows, dtype=np.float64)


def write_xyz(cloud: PointCloud, path) -> None:
    """Write the cloud as whitespace XYZ with 6 decimal places."""
    with open(path, "w", newline="\n") as handle:
        for x, y, z in cloud.points:
            handle.write(f"{x:.6f} {y:.6f} {z:.6f}\n")


@dataclass(frozen=True)
class WriteReport:
    """Paths produced by :func:`write_outputs`."""

    labels_path: Path
    regions_path: Path
    poles_path: Path
    n_points: int
    n_regions: int


def write_outputs(
    cloud: PointCloud,
    seg: Optional[Segmentation],
    regions: Sequence[FractureRegion],
    out_dir,
) -> WriteReport:
    """Write the per-point label table, the region table, and the pole plot.

    labels.csv : point index, coordinates, fracture region id (-1 outside)
    regions.csv : one row per fracture region with orientation columns
    poles.svg : lower-hemisphere equal-area pole scatter
    """
    out_dir = Path(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    n = len(cloud)

    labels = np.full(n, -1, dtype=np.int64)
    for region in regions:
        labels[region.point_indices] = region.id

    labels_path = out_dir / "labels.csv"
    with open(labels_path, "w", newline="\n") as handle:
        handle.write("point_index,x,y,z,region_id\n")
        for i in range(n):
            x, y, z = cloud.points[i]
            handle.write(f"{i},{x:.6f},{y:.6f},{z:.6f},{labels[i]}\n")

    regions_path = out_dir / "regions.csv"
    with open(regions_path, "w", newline="\n") as handle:
        handle.write(
            "region_id,point_count,centroid_x,centroid_y,centroid_z,"
            "normal_x,normal_y,normal_z,dip_direction_deg,dip_deg,"
            "pole_trend_deg,pole_plunge_deg\n"
        )
        for region in regions:
            cx, cy, cz = region.centroid
            nx, ny, nz = region.plane_normal
            handle.write(
                f"{region.id},{region.point_indices.size},"
                f"{cx:.6f},{cy:.6f},{cz:.6f},"
                f"{nx:.6f},{ny:.6f},{nz:.6f},"
                f"{region.dip_direction:.6f},{region.dip:.6f},"
                f"{region.pole_trend:.6f},{region.pole_plunge:.6f}\n"
            )

    poles_path = out_dir / "poles.svg"
    with open(poles_path, "w", newline="\n") as handle:
        handle.write(pole_scatter_svg(regions))

    return WriteReport(
        labels_path=labels_path,
        regions_path=regions_path,
        poles_path=poles_path,
        n_points=n,
        n_regions=len(regions),
    )


def pole_scatter_svg(regions: Sequence[FractureRegion], size: int = 500) -> str:
    """Standalone SVG 1.1 document: primitive circle, N/E/S/W ticks, poles."""
    cx = cy = size / 2.0
    net = 0.42 * size
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>\n',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{size}" height="{size}" viewBox="0 0 {size} {size}">\n',
        f'  <circle cx="{cx:.6f}" cy="{cy:.6f}" r="{net:.6f}" '
        'fill="none" stroke="black" stroke-width="1.5"/>\n',
    ]
    tick = 0.02 * size
    labels = (("N", 0.0, -1.0), ("E", 1.0, 0.0), ("S", 0.0, 1.0), ("W", -1.0, 0.0))
    for text, ux, uy in labels:
        x0, y0 = cx + ux * net, cy + uy * net
        x1, y1 = cx + ux * (net + tick), cy + uy * (net + tick)
        xt, yt = cx + ux * (net + 3.2 * tick), cy + uy * (net + 3.2 * tick)
        parts.append(
            f'  <line x1="{x0:.6f}" y1="{y0:.6f}" x2="{x1:.6f}" y2="{y1:.6f}" '
            'stroke="black" stroke-width="1"/>\n'
        )
        parts.append(
            f'  <text x="{xt:.6f}" y="{yt:.6f}" font-size="{0.035 * size:.6f}" '
            'font-family="sans-serif" text-anchor="middle" '
            f'dominant-baseline="central">{text}</text>\n'
        )
    for region in regions:
        _, _, px, py = pole_and_project(region.dip_direction, region.dip, net)
        parts.append(
            f'  <circle cx="{cx + px:.6f}" cy="{cy - py:.6f}" r="{0.008 * size:.6f}" '
            f'fill="steelblue" stroke="none"><title>region {region.id}</title></circle>\n'
        )
    parts.append("</svg>\n")
    return "".join(parts)


def write_features_csv(features: LocalFeatures, path) -> None:
    """Debug dump of per-point normals and curvature."""
    with open(path, "w", newline="\n") as handle:
        handle.write("point_index,nx,ny,nz,sigma,degenerate\n")
        for i in range(len(features)):
            nx, ny, nz = features.normals[i]
            handle.write(
                f"{i},{nx:.6f},{ny:.6f},{nz:.6f},"
                f"{features.curvatures[i]:.6f},{int(features.degenerate[i])}\n"
            )


def write_trace_csv(trace: Iterable[TraceRow], path) -> None:
    """Debug dump of the admission log from a traced growth run."""
    with open(path, "w", newline="\n") as handle:
        handle.write(
            "step,region_id,point,admitting_seed,angle_to_seed_deg,angle_to_ref_deg\n"
        )
        for row in trace:
            handle.write(
                f"{row.step},{row.region_id},{row.point},{row.admitting_seed},"
                f"{row.angle_to_seed_deg:.6f},{row.angle_to_ref_deg:.6f}\n"
            )


def write_truth_labels(labels, path) -> None:
    """Ground-truth label per point, for generated scenes."""
    labels = np.asarray(labels, dtype=np.int64)
    with open(path, "w", newline="\n") as handle:
        handle.write("point_index,label\n")
        for i, label in enumerate(labels):
            handle.write(f"{i},{label}\n")
