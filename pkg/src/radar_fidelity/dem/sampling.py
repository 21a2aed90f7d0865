"""Point selection primitives for the set-abstraction stage."""

from __future__ import annotations

import numpy as np


def farthest_point_sampling(points, k: int, start_index: int = 0) -> np.ndarray:
    """Greedy max-min selection of ``k`` point indices.

    The first pick is ``start_index``; each following pick maximizes the
    distance to the already-selected set, ties broken by lowest index
    (argmax keeps the first occurrence). The result depends only on the
    point multiset and the start index.
    """
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    if not 0 <= start_index < n:
        raise ValueError("start_index out of range")
    selected = np.empty(k, dtype=int)
    selected[0] = start_index
    min_dist = np.linalg.norm(pts - pts[start_index], axis=1)
    for step in range(1, k):
        nxt = int(np.argmax(min_dist))
        selected[step] = nxt
        min_dist = np.minimum(min_dist, np.linalg.norm(pts - pts[nxt], axis=1))
    return selected


def ball_query(points, centroid, radius: float, max_neighbors: int) -> np.ndarray:
    """Indices of points within ``radius`` of ``centroid``.

    Lowest indices first, truncated at ``max_neighbors``. A centroid with no
    neighbor in range gets its single nearest point, so no group is empty.
    """
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    if max_neighbors < 1:
        raise ValueError("max_neighbors must be >= 1")
    pts = np.asarray(points, dtype=float)
    dist = np.linalg.norm(pts - np.asarray(centroid, dtype=float), axis=1)
    inside = np.flatnonzero(dist <= radius)
    if len(inside) == 0:
        return np.array([int(np.argmin(dist))])
    return inside[:max_neighbors]
