"""Independent test oracles.

These deliberately avoid the production DP code paths: last-passage
times by exhaustive path enumeration, point-to-line values by the
definitional per-corner maximisation, and the weighted analogue by a
per-start maximisation over explicit row paths.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from geoforest.lattice import DIAG, Point, WeightGrid, last_passage


@lru_cache(maxsize=None)
def monotone_paths(dx: int, dy: int) -> tuple[np.ndarray, np.ndarray]:
    """All up-right vertex sequences from (0,0) to (dx,dy) as index arrays."""
    n = dx + dy
    rows, cols = [], []
    for combo in itertools.combinations(range(n), dx):
        i = j = 0
        ri, ci = [0], [0]
        for step in range(n):
            if step in combo:
                i += 1
            else:
                j += 1
            ri.append(i)
            ci.append(j)
        rows.append(ri)
        cols.append(ci)
    return np.array(rows), np.array(cols)


def brute_last_passage(w: np.ndarray) -> tuple[float, list[tuple[int, int]]]:
    """Exhaustive max over all monotone paths across the whole array."""
    dx, dy = w.shape[0] - 1, w.shape[1] - 1
    rows, cols = monotone_paths(dx, dy)
    totals = w[rows, cols].sum(axis=1)
    k = int(np.argmax(totals))
    path = list(zip(rows[k].tolist(), cols[k].tolist()))
    return float(totals[k]), path


def per_corner_point_to_line(grid: WeightGrid, sub, x) -> tuple[float, int]:
    """Definitional max over dominated corners of L(corner + d, x)."""
    best_v, best_o = -np.inf, None
    for o in sub.corners_below(x):
        z = sub.corner_position(int(o))
        v = last_passage(grid, Point(z.x1 + 1, z.x2 + 1), Point(*x))
        if v > best_v:
            best_v, best_o = v, int(o)
    if best_o is None:
        raise ValueError("no candidate corners")
    return best_v, best_o


def per_start_weighted_point_to_line(grid: WeightGrid, wsub, x: int, n: int):
    """Definitional max over k <= x of nu(k) + L((k,1),(x,n))."""
    best_v, best_k = -np.inf, None
    for k in range(wsub.k_lo, x + 1):
        v = wsub.value(k) + last_passage(grid, Point(k, 1), Point(x, n))
        if v > best_v:
            best_v, best_k = v, k
    return best_v, best_k
