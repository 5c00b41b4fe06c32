"""Planar geometry primitives used by the world simulator and the LiDAR model.

Everything works on plain numpy arrays. Polygons are (k, 2) vertex arrays
(implicitly closed), segment soups are (S, 4) arrays of [x1, y1, x2, y2].
"""

from __future__ import annotations

import numpy as np

# Parallel-ray rejection threshold for ray/segment intersection.
_PARALLEL_EPS = 1e-12


def polygon_area(vertices: np.ndarray) -> float:
    """Signed shoelace area of a polygon given as a (k, 2) vertex array."""
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def polygon_segments(vertices: np.ndarray) -> np.ndarray:
    """Edge soup (k, 4) of a closed polygon."""
    v = np.asarray(vertices, dtype=float)
    return np.concatenate([v, np.roll(v, -1, axis=0)], axis=1)


def rect_segments(xmin: float, ymin: float, xmax: float, ymax: float) -> np.ndarray:
    """The four walls of an axis-aligned rectangle as a (4, 4) segment soup."""
    corners = np.array(
        [[xmin, ymin], [xmax, ymin], [xmax, ymax], [xmin, ymax]], dtype=float
    )
    return polygon_segments(corners)


def point_in_polygon(point: np.ndarray, vertices: np.ndarray) -> bool:
    """Even-odd crossing test. Points exactly on the boundary may land on
    either side; callers that care about the boundary use distances instead."""
    x, y = float(point[0]), float(point[1])
    v = np.asarray(vertices, dtype=float)
    x1, y1 = v[:, 0], v[:, 1]
    x2, y2 = np.roll(x1, -1), np.roll(y1, -1)
    straddles = (y1 > y) != (y2 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xs = x1 + (y - y1) / (y2 - y1) * (x2 - x1)
    crossings = np.count_nonzero(straddles & (xs > x))
    return bool(crossings % 2)


def point_segments_distance(point: np.ndarray, segments: np.ndarray) -> np.ndarray:
    """Distance from one point to each segment in an (S, 4) soup."""
    p = np.asarray(point, dtype=float)
    s = np.asarray(segments, dtype=float)
    a = s[:, 0:2]
    d = s[:, 2:4] - a
    length_sq = np.einsum("ij,ij->i", d, d)
    # Degenerate (zero-length) segments fall back to the endpoint distance.
    t = np.zeros(len(s))
    nz = length_sq > 0.0
    t[nz] = np.einsum("ij,ij->i", (p - a)[nz], d[nz]) / length_sq[nz]
    t = np.clip(t, 0.0, 1.0)
    closest = a + t[:, None] * d
    return np.hypot(*(p - closest).T)


def ray_segments_hit(
    origin: np.ndarray, directions: np.ndarray, segments: np.ndarray, max_range: float
) -> np.ndarray:
    """First-hit distances for a fan of rays against a segment soup.

    origin: (2,) shared ray origin; directions: (R, 2) unit vectors;
    segments: (S, 4). Returns (R,) distances, max_range where nothing is hit
    within range. Rays parallel to a segment do not register a hit on it.
    """
    o = np.asarray(origin, dtype=float)
    d = np.asarray(directions, dtype=float)
    s = np.asarray(segments, dtype=float)
    if len(s) == 0:
        return np.full(len(d), float(max_range))
    a = s[:, 0:2]
    e = s[:, 2:4] - a  # (S, 2)
    ao = a - o  # (S, 2)

    # Solve o + t*d = a + u*e for each (ray, segment) pair.
    denom = d[:, 0:1] * e[None, :, 1] - d[:, 1:2] * e[None, :, 0]  # (R, S)
    cross_ao_e = ao[:, 0] * e[:, 1] - ao[:, 1] * e[:, 0]  # (S,)
    cross_ao_d = ao[None, :, 0] * d[:, 1:2] - ao[None, :, 1] * d[:, 0:1]  # (R, S)

    with np.errstate(divide="ignore", invalid="ignore"):
        t = cross_ao_e[None, :] / denom
        u = cross_ao_d / denom
    valid = (np.abs(denom) > _PARALLEL_EPS) & (t >= 0.0) & (u >= 0.0) & (u <= 1.0)
    t = np.where(valid, t, np.inf)
    hits = t.min(axis=1)
    return np.minimum(hits, float(max_range))


def wrap_angle(theta):
    """Wrap angle(s) to (-pi, pi]; values already in range pass through
    untouched (wrapping is exact for them, not merely close)."""
    t = np.asarray(theta, dtype=float)
    wrapped = -(np.mod(-t + np.pi, 2.0 * np.pi) - np.pi)
    result = np.where((t > -np.pi) & (t <= np.pi), t, wrapped)
    if np.ndim(theta) == 0:
        return float(result)
    return result
