"""Independent brute-force oracles; deliberately written without reusing
the implementations they check.
"""
from __future__ import annotations

import math
import random

import numpy as np


def raycast_contains(vertices: list[tuple[float, float]],
                     x: float, y: float, eps: float = 1e-12) -> bool:
    """Classic crossing-number ray cast with an explicit boundary check.

    vertices: closed or open ring of (x, y) tuples.
    """
    pts = list(vertices)
    if pts[0] == pts[-1]:
        pts = pts[:-1]
    n = len(pts)
    # boundary check
    for i in range(n):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % n]
        cross = (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1)
        if abs(cross) <= eps * max(1.0, abs(x2 - x1), abs(y2 - y1)):
            if min(x1, x2) - eps <= x <= max(x1, x2) + eps and \
               min(y1, y2) - eps <= y <= max(y1, y2) + eps:
                return True
    inside = False
    j = n - 1
    for i in range(n):
        xi, yi = pts[i]
        xj, yj = pts[j]
        if (yi > y) != (yj > y):
            x_int = xi + (y - yi) * (xj - xi) / (yj - yi)
            if x < x_int:
                inside = not inside
        j = i
    return inside


def random_convex_polygon(rng: random.Random, cx: float, cy: float,
                          radius: float, n_vertices: int = 8
                          ) -> list[tuple[float, float]]:
    """Convex polygon from sorted random angles on a jittered circle."""
    angles = sorted(rng.uniform(0, 2 * math.pi) for _ in range(n_vertices))
    pts = [(cx + radius * (0.5 + 0.5 * rng.random()) * math.cos(a),
            cy + radius * (0.5 + 0.5 * rng.random()) * math.sin(a))
           for a in angles]
    # jittered radii can break convexity; take the convex hull by gift wrap
    return convex_hull(pts)


def convex_hull(pts: list[tuple[float, float]]) -> list[tuple[float, float]]:
    pts = sorted(set(pts))
    if len(pts) <= 2:
        raise ValueError("need at least 3 distinct points")

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def monte_carlo_overlap_area(vertices: list[tuple[float, float]],
                             min_x: float, min_y: float,
                             max_x: float, max_y: float,
                             n_samples: int, seed: int = 0) -> float:
    """Area (same units^2) of polygon ∩ box by uniform sampling in the box."""
    rng = random.Random(seed)
    hits = 0
    for _ in range(n_samples):
        x = rng.uniform(min_x, max_x)
        y = rng.uniform(min_y, max_y)
        if raycast_contains(vertices, x, y):
            hits += 1
    return hits / n_samples * (max_x - min_x) * (max_y - min_y)


def vectorized_inside(vertices: list[tuple[float, float]],
                      xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Crossing-number test for many points at once (no boundary special
    case; used for area-style estimates where boundaries have measure zero).
    """
    pts = list(vertices)
    if pts[0] == pts[-1]:
        pts = pts[:-1]
    inside = np.zeros(xs.shape, dtype=bool)
    n = len(pts)
    j = n - 1
    for i in range(n):
        xi, yi = pts[i]
        xj, yj = pts[j]
        crosses = (yi > ys) != (yj > ys)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_int = xi + (ys - yi) * (xj - xi) / (yj - yi)
        inside ^= crosses & (xs < x_int)
        j = i
    return inside


def fine_raster_weighted_mean(vertices: list[tuple[float, float]],
                              values: np.ndarray, xll: float, yll: float,
                              cellsize: float, nodata: float,
                              subdiv: int = 10) -> float:
    """Weighted mean oracle: rasterise the polygon on a subdiv x subdiv
    finer subgrid and average the covering cell values (cos-latitude
    weighted, matching the equirectangular area metric).
    """
    nrows, ncols = values.shape
    fine = cellsize / subdiv
    xs_centers = xll + (np.arange(ncols * subdiv) + 0.5) * fine
    ys_centers = yll + (np.arange(nrows * subdiv) + 0.5) * fine
    xs, ys = np.meshgrid(xs_centers, ys_centers)
    inside = vectorized_inside(vertices, xs, ys)
    # row 0 of `values` is the northern row; ys_centers run south->north
    row_idx = nrows - 1 - (np.arange(nrows * subdiv) // subdiv)
    col_idx = np.arange(ncols * subdiv) // subdiv
    vals = values[np.ix_(row_idx, col_idx)]
    weights = inside & (vals != nodata)
    coslat = np.cos(np.radians(ys))
    w = weights * coslat
    if w.sum() == 0:
        raise ValueError("polygon covers no data cells")
    return float((vals * w).sum() / w.sum())


def metric_oracle(obs: np.ndarray, pred: np.ndarray
                  ) -> tuple[float, float, float]:
    """FAC2 / FB / NMSE recomputed from scratch with numpy."""
    obs = np.asarray(obs, dtype=float)
    pred = np.asarray(pred, dtype=float)
    ratio = pred / obs
    fac2 = float(np.mean((ratio >= 0.5) & (ratio <= 2.0)))
    co, cp = obs.mean(), pred.mean()
    fb = float((co - cp) / (0.5 * (co + cp)))
    nmse = float(np.mean((obs - pred) ** 2) / (co * cp))
    return fac2, fb, nmse
