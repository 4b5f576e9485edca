"""Planar geometry helpers for snapshot-to-graph construction.

Polylines are (N, 2) float arrays in a common metric frame.  Footprints
and bounding boxes are shapely polygons; lane footprints use flat end
caps so consecutive segments of one lane do not overlap each other.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from shapely.geometry import LineString, Polygon


def as_polyline(points: Sequence[Sequence[float]]) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 2 or arr.shape[1] != 2:
        raise ValueError(f"polyline needs at least two 2-d points, got shape {arr.shape}")
    return arr


def arclength(polyline: np.ndarray) -> float:
    deltas = np.diff(polyline, axis=0)
    return float(np.hypot(deltas[:, 0], deltas[:, 1]).sum())


def cumulative_arclength(polyline: np.ndarray) -> np.ndarray:
    deltas = np.diff(polyline, axis=0)
    seg = np.hypot(deltas[:, 0], deltas[:, 1])
    return np.concatenate(([0.0], np.cumsum(seg)))


def point_at(polyline: np.ndarray, s: float) -> np.ndarray:
    """Point at arclength ``s`` (clamped to the polyline extent)."""
    cum = cumulative_arclength(polyline)
    s = min(max(s, 0.0), float(cum[-1]))
    x = np.interp(s, cum, polyline[:, 0])
    y = np.interp(s, cum, polyline[:, 1])
    return np.array([x, y])


def midpoint(polyline: np.ndarray) -> np.ndarray:
    return point_at(polyline, arclength(polyline) / 2.0)


def split_polyline(polyline: np.ndarray, parts: int) -> list[np.ndarray]:
    """Cut into ``parts`` pieces of equal arclength, endpoints preserved."""
    if parts < 1:
        raise ValueError("parts must be >= 1")
    cum = cumulative_arclength(polyline)
    total = float(cum[-1])
    if parts == 1:
        return [polyline.copy()]
    cuts = [total * j / parts for j in range(parts + 1)]
    pieces: list[np.ndarray] = []
    for j in range(parts):
        lo, hi = cuts[j], cuts[j + 1]
        inner = cum[(cum > lo) & (cum < hi)]
        stations = np.concatenate(([lo], inner, [hi]))
        xs = np.interp(stations, cum, polyline[:, 0])
        ys = np.interp(stations, cum, polyline[:, 1])
        pieces.append(np.column_stack([xs, ys]))
    return pieces


def footprint(polyline: np.ndarray, width: float) -> Polygon:
    """Centerline buffered to the lane width, flat-capped at the ends."""
    line = LineString(polyline)
    return line.buffer(width / 2.0, cap_style="flat")


def oriented_box(x: float, y: float, heading: float, length: float, width: float) -> Polygon:
    """Axis-of-travel aligned rectangle centred on (x, y)."""
    c, s = math.cos(heading), math.sin(heading)
    hl, hw = length / 2.0, width / 2.0
    corners = []
    for dx, dy in ((hl, hw), (hl, -hw), (-hl, -hw), (-hl, hw)):
        corners.append((x + c * dx - s * dy, y + s * dx + c * dy))
    return Polygon(corners)


def overlap_area(a: Polygon, b: Polygon) -> float:
    if not a.intersects(b):
        return 0.0
    return float(a.intersection(b).area)


def to_ego_frame(
    ego_x: float, ego_y: float, ego_heading: float, x: float, y: float
) -> tuple[float, float]:
    """World point -> (longitudinal, lateral) in the ego frame.

    Longitudinal is positive ahead of the ego, lateral positive to its left.
    """
    dx, dy = x - ego_x, y - ego_y
    c, s = math.cos(ego_heading), math.sin(ego_heading)
    return (c * dx + s * dy, -s * dx + c * dy)


def distance(ax: float, ay: float, bx: float, by: float) -> float:
    return math.hypot(ax - bx, ay - by)
