# maipp/core/geometry.py

"""Polyline helpers shared by the simulator, the intent rollouts and the RRT planner."""

from typing import List, Sequence, Tuple

import numpy as np

from maipp.core.errors import DomainError

_EPS = 1e-12


def as_points(points: Sequence[Sequence[float]]) -> np.ndarray:
    """Returns an ``(n, 2)`` float array, accepting an empty sequence."""
    arr = np.asarray(points, dtype=float)
    if arr.size == 0:
        return np.zeros((0, 2))
    return arr.reshape(-1, 2)


def check_in_domain(loc: Sequence[float], tol: float = 1e-12) -> np.ndarray:
    """Validates a location against the unit square and returns it as an array."""
    p = np.asarray(loc, dtype=float).reshape(-1)
    if p.shape != (2,) or not np.all(np.isfinite(p)):
        raise DomainError(f"expected a finite 2-vector, got {loc!r}")
    if np.any(p < -tol) or np.any(p > 1.0 + tol):
        raise DomainError(f"location {p.tolist()} lies outside [0,1]^2")
    return p


def path_length(polyline: Sequence[Sequence[float]]) -> float:
    pts = as_points(polyline)
    if len(pts) < 2:
        return 0.0
    return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))


def sample_along(
    polyline: Sequence[Sequence[float]], spacing: float, offset: float = 0.0
) -> Tuple[np.ndarray, np.ndarray, float]:
    """
    Places measurement points every ``spacing`` of travel along a polyline.

    Args:
        polyline: Vertices of the path, travelled from first to last
        spacing: Distance between consecutive measurements
        offset: Distance already travelled since the last measurement

    Returns:
        Tuple of (points, arc lengths of the points from the path start,
        distance travelled since the last measurement at the path end)
    """
    pts = as_points(polyline)
    total = path_length(pts)
    first = max(spacing - offset, 0.0)
    arcs = []
    s = first
    while s <= total + 1e-9:
        arcs.append(min(s, total))
        s += spacing
    arcs_arr = np.asarray(arcs, dtype=float)
    locs = point_at(pts, arcs_arr) if len(arcs_arr) else np.zeros((0, 2))
    if len(arcs_arr):
        remainder = total - arcs_arr[-1]
    else:
        remainder = offset + total
    return locs, arcs_arr, float(remainder)


def point_at(polyline: Sequence[Sequence[float]], arc: "np.ndarray | float") -> np.ndarray:
    """Interpolates positions at the given arc lengths along a polyline."""
    pts = as_points(polyline)
    arcs = np.atleast_1d(np.asarray(arc, dtype=float))
    if len(pts) == 1:
        return np.repeat(pts, len(arcs), axis=0)
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    xs = np.interp(arcs, cum, pts[:, 0])
    ys = np.interp(arcs, cum, pts[:, 1])
    return np.column_stack([xs, ys])


def truncate(polyline: Sequence[Sequence[float]], length: float) -> List[np.ndarray]:
    """Returns the prefix of a polyline of the given travelled length."""
    pts = as_points(polyline)
    if len(pts) == 0:
        return []
    out = [pts[0]]
    travelled = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        seg = float(np.linalg.norm(b - a))
        if travelled + seg >= length - _EPS:
            remaining = length - travelled
            if remaining > _EPS and seg > _EPS:
                out.append(a + (b - a) * (remaining / seg))
            return out
        out.append(b)
        travelled += seg
    return out
