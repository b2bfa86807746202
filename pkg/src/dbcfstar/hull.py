"""Planar lower convex hulls (Andrew's monotone chain) and their evaluation."""

from __future__ import annotations

import numpy as np


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def lower_hull(x, y) -> np.ndarray:
    """Vertices of the lower convex hull of the points, sorted by x.

    For repeated x only the lowest y is kept. Returns an ``(r, 2)`` array.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    order = np.lexsort((y, x))
    xs, ys = x[order], y[order]
    first = np.ones(xs.size, dtype=bool)
    first[1:] = xs[1:] != xs[:-1]
    pts = np.column_stack([xs[first], ys[first]])
    hull: list[np.ndarray] = []
    for p in pts:
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], p) <= 0:
            hull.pop()
        hull.append(p)
    return np.array(hull)


def lower_hull_indices(x, y) -> np.ndarray:
    """Like :func:`lower_hull` but returns indices into the input arrays."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    order = np.lexsort((y, x))
    keep = [order[0]]
    for i in order[1:]:
        if x[i] != x[keep[-1]]:
            keep.append(i)
    hull: list[int] = []
    for i in keep:
        p = (x[i], y[i])
        while len(hull) >= 2 and _cross((x[hull[-2]], y[hull[-2]]),
                                        (x[hull[-1]], y[hull[-1]]), p) <= 0:
            hull.pop()
        hull.append(int(i))
    return np.array(hull)


def evaluate(hull: np.ndarray, xq) -> np.ndarray:
    """Piecewise-linear interpolation of hull vertices; NaN outside the x-range."""
    xq = np.asarray(xq, dtype=float)
    out = np.interp(xq, hull[:, 0], hull[:, 1])
    outside = (xq < hull[0, 0]) | (xq > hull[-1, 0])
    return np.where(outside, np.nan, out)


def upper_right_hull(x, y) -> np.ndarray:
    """Indices of points on the upper-right (Pareto) boundary of the convex hull.

    Used to convexify sampled rate pairs: dominated and interior points are
    removed; the result is sorted by increasing x.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    # upper hull = lower hull of the reflected points
    idx = lower_hull_indices(x, -y)
    # keep only the part where the boundary is nonincreasing in y
    ys = y[idx]
    start = len(ys) - 1 - int(np.argmax(ys[::-1]))
    return idx[start:]
