"""Exact lattice last-passage percolation over i.i.d. exponential weights.

Every vertex of Z^2 carries an independent Exp(1) weight. An up-right
path between ordered points x <= y moves by unit steps e1 = (1,0) or
e2 = (0,1) and collects the weights of all vertices it visits, endpoints
included. The last-passage time L(x, y) is the maximal such sum; the
geodesic is the a.s. unique maximising path. L obeys the recursion

    L(x, y) = W_y + max(L(x, y - e1), L(x, y - e2)),   L(x, x) = W_x,

evaluated here with vectorised row sweeps (prefix maxima), so rectangles
with a few hundred thousand cells stay cheap.

Reproducibility contract: weights are drawn by inverse CDF, W = -log(U)
with U uniform on (0, 1], from numpy's PCG64 generator seeded through
SeedSequence. Identical seed and dimensions reproduce identical grids
bit for bit; independent streams are derived from (master seed, replica
id) via SeedSequence spawn keys.

Argmax ties (probability zero in exact arithmetic, possible in floats)
are always resolved toward the e1-predecessor so that outputs stay
deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConfigError

E1 = (1, 0)
E2 = (0, 1)
DIAG = (1, 1)


class Point(NamedTuple):
    """Lattice point (x1, x2)."""

    x1: int
    x2: int

    def __add__(self, other):  # type: ignore[override]
        return Point(self.x1 + other[0], self.x2 + other[1])

    def __le__(self, other):  # componentwise partial order
        return self.x1 <= other[0] and self.x2 <= other[1]

    def __lt__(self, other):
        return self.x1 < other[0] and self.x2 < other[1]


def as_point(p) -> Point:
    return p if isinstance(p, Point) else Point(int(p[0]), int(p[1]))


def make_rng(seed, *spawn_key: int) -> np.random.Generator:
    """PCG64 generator for a (master seed, stream id...) address."""
    if isinstance(seed, np.random.Generator):
        if spawn_key:
            raise ConfigError("cannot respawn from a live Generator")
        return seed
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(spawn_key))
    return np.random.Generator(np.random.PCG64(ss))


def exp1(rng: np.random.Generator, size) -> np.ndarray:
    """Exp(1) by inverse CDF -log(U), U in (0, 1]."""
    u = rng.random(size)
    return -np.log1p(-u)


@dataclass(frozen=True)
class WeightGrid:
    """Immutable box of i.i.d. Exp(1) vertex weights.

    weights[i, j] is the weight at lattice point
    (origin.x1 + i, origin.x2 + j); axis 0 runs along e1.
    """

    origin: Point
    weights: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        if self.weights.ndim != 2 or min(self.weights.shape) < 1:
            raise ConfigError("weights must be a non-empty 2-d array")
        self.weights.flags.writeable = False

    @property
    def width(self) -> int:
        return self.weights.shape[0]

    @property
    def height(self) -> int:
        return self.weights.shape[1]

    @property
    def top_right(self) -> Point:
        return Point(self.origin.x1 + self.width - 1, self.origin.x2 + self.height - 1)

    def contains(self, p) -> bool:
        p = as_point(p)
        return self.origin <= p and p <= self.top_right

    def index(self, p) -> tuple[int, int]:
        p = as_point(p)
        if not self.contains(p):
            raise ConfigError(f"point {tuple(p)} outside grid")
        return p.x1 - self.origin.x1, p.x2 - self.origin.x2

    def weight(self, p) -> float:
        i, j = self.index(p)
        return float(self.weights[i, j])

    def box(self, lo, hi) -> np.ndarray:
        """View of weights over the rectangle [lo, hi], axis 0 along e1."""
        i0, j0 = self.index(lo)
        i1, j1 = self.index(hi)
        return self.weights[i0 : i1 + 1, j0 : j1 + 1]

    def level_weights(self, s: int, col_lo: int, col_hi: int) -> np.ndarray:
        """Weights of the antidiagonal cells (c, s - c), c in [col_lo, col_hi].

        Cells outside the grid are filled with NaN; the DP masks them out.
        """
        cols = np.arange(col_lo, col_hi + 1)
        rows = s - cols
        i = cols - self.origin.x1
        j = rows - self.origin.x2
        ok = (i >= 0) & (i < self.width) & (j >= 0) & (j < self.height)
        out = np.full(cols.size, np.nan)
        out[ok] = self.weights[i[ok], j[ok]]
        return out


def sample_weights(width: int, height: int, seed, origin=Point(0, 0)) -> WeightGrid:
    """Sample an i.i.d. Exp(1) grid, deterministic under the seed."""
    if width < 1 or height < 1:
        raise ConfigError("grid dimensions must be positive")
    rng = make_rng(seed)
    w = exp1(rng, (int(width), int(height)))
    return WeightGrid(
        origin=as_point(origin),
        weights=w,
        seed=int(seed) if not isinstance(seed, np.random.Generator) else None,
    )


def path_weight(grid: WeightGrid, path: Sequence) -> float:
    """Sum of vertex weights along an up-right path, endpoints included."""
    if len(path) == 0:
        raise ConfigError("empty path")
    pts = [as_point(p) for p in path]
    for a, b in zip(pts, pts[1:]):
        step = (b.x1 - a.x1, b.x2 - a.x2)
        if step not in (E1, E2):
            raise ConfigError(f"illegal step {step}; only e1/e2 allowed")
    return float(sum(grid.weight(p) for p in pts))


def _lpp_field(w: np.ndarray) -> np.ndarray:
    """DP table L[i, j] = last-passage time from cell (0,0) to (i, j).

    Row sweep with prefix maxima:
    L[i, j] = ps[j] + max_{k <= j} (L[i-1, k] - ps[k-1]),
    where ps is the running sum of row i of w.
    """
    out = np.empty_like(w)
    out[0] = np.cumsum(w[0])
    for i in range(1, w.shape[0]):
        ps = np.cumsum(w[i])
        a = out[i - 1].copy()
        a[1:] -= ps[:-1]
        out[i] = ps + np.maximum.accumulate(a)
    return out


def _check_order(x: Point, y: Point):
    if not (x.x1 <= y.x1 and x.x2 <= y.x2):
        raise ConfigError(f"{tuple(x)} is not <= {tuple(y)} componentwise")


def last_passage(grid: WeightGrid, x, y) -> float:
    """L(x, y): maximal path weight over all up-right paths from x to y."""
    x, y = as_point(x), as_point(y)
    _check_order(x, y)
    field = _lpp_field(grid.box(x, y))
    return float(field[-1, -1])


def last_passage_field(grid: WeightGrid, x, y) -> np.ndarray:
    """Full DP table of L(x, .) over the rectangle [x, y]."""
    x, y = as_point(x), as_point(y)
    _check_order(x, y)
    return _lpp_field(grid.box(x, y))


def backtrack_path(field: np.ndarray, i: int, j: int) -> list[tuple[int, int]]:
    """Argmax path from offset (0, 0) to (i, j) inside a DP table.

    Ties prefer the e1-predecessor (smaller axis-0 index).
    """
    rev = [(i, j)]
    while (i, j) != (0, 0):
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        elif field[i - 1, j] >= field[i, j - 1]:
            i -= 1
        else:
            j -= 1
        rev.append((i, j))
    rev.reverse()
    return rev


def geodesic(grid: WeightGrid, x, y) -> list[Point]:
    """The maximising up-right path from x to y (a.s. unique)."""
    x, y = as_point(x), as_point(y)
    _check_order(x, y)
    field = _lpp_field(grid.box(x, y))
    offs = backtrack_path(field, field.shape[0] - 1, field.shape[1] - 1)
    return [Point(x.x1 + i, x.x2 + j) for i, j in offs]
