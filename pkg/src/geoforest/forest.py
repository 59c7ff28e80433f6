"""Geodesic forests: point-to-substrate roots, heights and coalescence.

The point-to-line last-passage value of a growth-region point x is the
maximum of L(z + d, x) over the concave corners z dominated by x, with
d = (1, 1); the maximising corner is the root of x. Instead of running
one point-to-point DP per corner, everything here uses a single labelled
frontier sweep over antidiagonal levels s = x1 + x2: each corner injects
value 0 at its seed cell z + d, values propagate by

    V(x) = W_x + max(V(x - e1), V(x - e2)),

and the argmax predecessor's corner label rides along. The sweep equals
the definitional per-corner maximisation (tested against it) and costs
one frontier of memory, which enables streaming with early termination
for tree heights: a tree that owns no cell on a level is dead forever,
because every vertex of a geodesic shares the geodesic's root.

Exactness bookkeeping: labels at level s are exact for columns c with
c >= out_lo - (level_hi - s), provided the substrate window contains
every corner that can reach the requested cells. Narrower windows are
refused unless the caller explicitly asks for approximate output.

Argmax ties resolve toward the e1-predecessor (equivalently the smaller
corner label, since labels are nondecreasing along a level).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, WindowError
from .lattice import Point, WeightGrid, as_point, exp1, _lpp_field
from .substrate import NO_ROOT, Substrate, WeightedSubstrate

WeightFn = Callable[[int, int, int], np.ndarray]  # (level s, col_lo, col_hi) -> weights


@dataclass(frozen=True)
class HeightRecord:
    """Height of one geodesic tree, possibly censored at the level cap."""

    corner: int
    height: int
    censored: bool


@dataclass(frozen=True)
class CountingRecord:
    """Number of corners in (0, m] whose tree reaches level n."""

    level: int
    interval: int
    count: int


@dataclass(frozen=True)
class CoalescenceRecord:
    """Second coordinate of the first common vertex of two geodesics."""

    t: int
    merged_before_target: bool


class StreamedLevelWeights:
    """Draws level weight vectors sequentially from one generator.

    Deterministic as long as levels are requested in ascending order
    with a fixed band per level, which is how every kernel here works.
    """

    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def __call__(self, s: int, col_lo: int, col_hi: int) -> np.ndarray:
        return exp1(self.rng, col_hi - col_lo + 1)


def frontier_stream(
    sub: Substrate,
    col_lo: int,
    col_hi: int,
    weight_fn: WeightFn,
    level_hi: int,
    row_cap: int | None = None,
):
    """Yield (s, values, roots) for levels s from the first seed upward.

    Arrays are aligned on columns [col_lo, col_hi]; cells outside the
    growth region (or unreachable from any windowed corner) carry -inf
    and the NO_ROOT sentinel. Raises ConfigError if a reachable cell has
    no weight (grid too small).
    """
    ncol = col_hi - col_lo + 1
    cols = np.arange(col_lo, col_hi + 1)
    colsum = cols + sub.bottom_profile(col_lo, col_hi)
    # corner seeds grouped by level
    seeds: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    pos = sub.corner_positions()
    ords = sub.corner_ordinals()
    seed_col = pos[:, 0] + 1
    seed_level = pos[:, 0] + pos[:, 1] + 2
    in_band = (seed_col >= col_lo) & (seed_col <= col_hi) & (seed_level <= level_hi)
    for lvl in np.unique(seed_level[in_band]):
        sel = in_band & (seed_level == lvl)
        seeds[int(lvl)] = (seed_col[sel] - col_lo, ords[sel])
    if not seeds:
        raise ConfigError("no corner seeds inside the requested window")
    v = np.full(ncol, -np.inf)
    r = np.full(ncol, NO_ROOT, dtype=np.int64)
    for s in range(min(seeds), level_hi + 1):
        w = weight_fn(s, col_lo, col_hi)
        pv = np.empty(ncol)
        pv[0] = -np.inf
        pv[1:] = v[:-1]
        take_e1 = pv >= v
        base = np.where(take_e1, pv, v)
        root = np.where(take_e1, np.concatenate(([NO_ROOT], r[:-1])), r)
        if s in seeds:
            idx, so = seeds[s]
            fresh = base[idx] == -np.inf
            base[idx[fresh]] = 0.0
            root[idx[fresh]] = so[fresh]
        region = colsum <= s
        if row_cap is not None:
            region &= (s - cols) <= row_cap
        reach = region & (base > -np.inf)
        if np.isnan(w[reach]).any():
            raise ConfigError("weight grid does not cover the growth region")
        v = np.where(reach, w + base, -np.inf)
        r = np.where(reach, root, NO_ROOT)
        yield s, v, r


def point_to_line(grid: WeightGrid, sub: Substrate, x) -> tuple[float, int]:
    """Max over dominated corners z of L(z + d, x) and the argmax corner.

    Returns (value, corner ordinal). Requires every corner dominated by
    x to lie inside the substrate window.
    """
    x = as_point(x)
    _check_corner_coverage(sub, x)
    cand = sub.corners_below(x)
    if cand.size == 0:
        raise ConfigError(f"{tuple(x)} dominates no concave corner")
    col_lo = int(min(sub.corner_position(int(o)).x1 for o in cand)) + 1
    out = None
    for s, v, r in frontier_stream(
        sub, col_lo, x.x1, grid.level_weights, x.x1 + x.x2, row_cap=x.x2
    ):
        if s == x.x1 + x.x2:
            out = (float(v[x.x1 - col_lo]), int(r[x.x1 - col_lo]))
    if out is None or out[1] == NO_ROOT:
        raise ConfigError(f"{tuple(x)} unreachable from any windowed corner")
    return out


def _check_corner_coverage(sub: Substrate, x: Point):
    """The substrate window must extend past x on both sides, so that no
    corner dominated by x can be hiding outside the window."""
    if sub.positions[:, 0].max() < x.x1 or sub.positions[:, 1].max() < x.x2:
        raise WindowError(
            f"substrate window too small to enumerate corners below {tuple(x)}"
        )


@dataclass(frozen=True)
class RootMap:
    """Per-cell root labels over a level range, column-aligned.

    values[k] and roots[k] describe antidiagonal level level_lo + k over
    columns [col_lo, col_hi]. Labels at level s are exact for columns
    >= exact_lo + (s - level_lo); root_of refuses cells outside that
    wedge unless the map was built as approximate.
    """

    substrate: Substrate
    level_lo: int
    level_hi: int
    col_lo: int
    col_hi: int
    values: np.ndarray
    roots: np.ndarray
    exact_lo: int
    approximate: bool = False

    def _exact_col_lo(self, s: int) -> int:
        return self.exact_lo + (s - self.level_lo)

    def root_of(self, p) -> int:
        p = as_point(p)
        s = p.x1 + p.x2
        if not (self.level_lo <= s <= self.level_hi) or not (
            self.col_lo <= p.x1 <= self.col_hi
        ):
            raise KeyError(f"{tuple(p)} outside root map region")
        if not self.approximate and p.x1 < self._exact_col_lo(s):
            raise WindowError(f"{tuple(p)} outside the exact wedge of this map")
        root = int(self.roots[s - self.level_lo, p.x1 - self.col_lo])
        if root == NO_ROOT:
            raise KeyError(f"{tuple(p)} is not rooted (outside growth region)")
        return root

    def value_of(self, p) -> float:
        self.root_of(p)
        p = as_point(p)
        return float(self.values[p.x1 + p.x2 - self.level_lo, p.x1 - self.col_lo])

    def level_cells(self, s: int) -> tuple[np.ndarray, np.ndarray]:
        """(columns, roots) of rooted cells on level s, exact wedge only."""
        k = s - self.level_lo
        cols = np.arange(self.col_lo, self.col_hi + 1)
        ok = self.roots[k] != NO_ROOT
        if not self.approximate:
            ok &= cols >= self._exact_col_lo(s)
        return cols[ok], self.roots[k][ok]

    def counting(self, n: int, m: int) -> CountingRecord:
        """Distinct roots in (0, m] owning a cell on level x1 + x2 = n + 1."""
        if m < 1:
            raise ConfigError("interval length must be >= 1")
        s = n + 1
        if not (self.level_lo <= s <= self.level_hi):
            raise WindowError("root map does not reach the requested level")
        cols, roots = self.level_cells(s)
        # cells owned by roots in (0, m] live on columns [2, m + n]
        if cols.size == 0 or cols.min() > 2 or cols.max() < m + n:
            raise WindowError("root map too narrow for the requested interval")
        sel = (roots >= 1) & (roots <= m)
        return CountingRecord(level=n, interval=m, count=int(np.unique(roots[sel]).size))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x1", "x2", "root_z"])
        for s in range(self.level_lo, self.level_hi + 1):
            cols, roots = self.level_cells(s)
            for c, z in zip(cols, roots):
                w.writerow([int(c), int(s - c), int(z)])
        return buf.getvalue()


def build_forest(
    grid: WeightGrid,
    sub: Substrate,
    level_hi: int,
    out_cols: tuple[int, int],
    approximate: bool = False,
) -> RootMap:
    """Labelled root map of the growth region up to antidiagonal level_hi.

    out_cols bounds the columns whose labels the caller wants; the sweep
    is widened to the full causal cone of those cells, so the returned
    labels match the definitional per-corner maximisation exactly.
    """
    out_lo, out_hi = out_cols
    if out_lo > out_hi:
        raise ConfigError("invalid lateral bounds")
    _check_corner_coverage(sub, Point(out_hi, level_hi - out_lo))
    pos = sub.corner_positions()
    s_min = int((pos[:, 0] + pos[:, 1]).min()) + 2
    band_lo = out_lo - (level_hi - s_min)
    levels = []
    vals = []
    roots = []
    for s, v, r in frontier_stream(sub, band_lo, out_hi, grid.level_weights, level_hi):
        levels.append(s)
        vals.append(v)
        roots.append(r)
    return RootMap(
        substrate=sub,
        level_lo=levels[0],
        level_hi=levels[-1],
        col_lo=band_lo,
        col_hi=out_hi,
        values=np.vstack(vals),
        roots=np.vstack(roots),
        exact_lo=band_lo + (levels[0] - s_min),
        approximate=approximate,
    )


# ---------------------------------------------------------------------------
# Flat diagonal substrate: streamed heights with early termination
# ---------------------------------------------------------------------------


def flat_tree_height(weight_fn: WeightFn, n_max: int, corner: int = 0) -> HeightRecord:
    """Height of the tree rooted at (corner, -corner) on the flat substrate.

    Streams antidiagonal levels, keeping the full competition band
    [corner + h + 1 - n_max, corner + n_max] needed for exact labels, and
    stops at the first level the root owns no cell. Heights >= n_max are
    censored at n_max.
    """
    if n_max < 1:
        raise ConfigError("n_max must be >= 1")
    col_lo = corner + 2 - n_max
    col_hi = corner + n_max
    v = weight_fn(2, col_lo, col_hi).copy()
    r = np.arange(col_lo - 1, col_hi, dtype=np.int64)
    i0 = n_max - 1  # index of column corner + 1
    for h in range(2, n_max + 1):
        w = weight_fn(h + 1, col_lo, col_hi)
        pv = np.empty_like(v)
        pv[0] = -np.inf
        pv[1:] = v[:-1]
        take = pv >= v
        r = np.where(take, np.concatenate(([NO_ROOT], r[:-1])), r)
        v = w + np.maximum(pv, v)
        v[: h - 1] = -np.inf  # left of the exact band
        if not np.any(r[i0 : i0 + h] == corner):
            return HeightRecord(corner=corner, height=h - 1, censored=False)
    return HeightRecord(corner=corner, height=n_max, censored=True)


def flat_max_height(weight_fn: WeightFn, m: int, n_max: int) -> tuple[int, bool]:
    """H(m) = max height among trees rooted in (0, m], censored at n_max.

    Pathwise H(m) < n iff no root in (0, m] owns a cell on level n.
    """
    if m < 1:
        raise ConfigError("m must be >= 1")
    if n_max < 1:
        raise ConfigError("n_max must be >= 1")
    col_lo = 2 - n_max
    col_hi = m + n_max
    v = weight_fn(2, col_lo, col_hi).copy()
    r = np.arange(col_lo - 1, col_hi, dtype=np.int64)
    i0 = n_max  # index of column 2, leftmost cell ownable by root 1
    height = 1
    for h in range(2, n_max + 1):
        w = weight_fn(h + 1, col_lo, col_hi)
        pv = np.empty_like(v)
        pv[0] = -np.inf
        pv[1:] = v[:-1]
        take = pv >= v
        r = np.where(take, np.concatenate(([NO_ROOT], r[:-1])), r)
        v = w + np.maximum(pv, v)
        v[: h - 1] = -np.inf
        block = r[i0 : i0 + m + h - 1]
        if not np.any((block >= 1) & (block <= m)):
            return height, False
        height = h
    return n_max, True


def grid_weight_fn(grid: WeightGrid) -> WeightFn:
    return grid.level_weights


# ---------------------------------------------------------------------------
# Asymptotic roots along a direction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AsymptoticRootRecord:
    root: int | None
    stabilized: bool
    checkpoints: tuple[int, ...]
    roots: tuple[int, ...]


def direction_point(s: int, a: float) -> Point:
    """Lattice point on antidiagonal level s along direction (1, a)."""
    x1 = int(round(s / (1.0 + a)))
    return Point(x1, s - x1)


def asymptotic_root_fn(
    weight_fn: WeightFn,
    sub: Substrate,
    a: float,
    checkpoints: Sequence[int],
    agree: int = 3,
) -> AsymptoticRootRecord:
    """Root labels of direction-(1, a) points at increasing levels.

    Declared stabilized when the last `agree` checkpoints give the same
    corner, at which point the sweep stops; non-stabilization within the
    window is reported, never guessed.
    """
    cks = sorted(int(s) for s in checkpoints)
    if len(cks) < agree:
        raise ConfigError("need at least `agree` checkpoints")
    targets = {s: direction_point(s, a) for s in cks}
    x_last = targets[cks[-1]]
    _check_corner_coverage(sub, x_last)
    cand = sub.corners_below(x_last)
    if cand.size == 0:
        raise ConfigError("final checkpoint dominates no corner")
    col_lo = int(min(sub.corner_position(int(o)).x1 for o in cand)) + 1
    found: list[int] = []
    for s, v, r in frontier_stream(
        sub, col_lo, x_last.x1, weight_fn, cks[-1], row_cap=x_last.x2
    ):
        if s in targets:
            x = targets[s]
            found.append(int(r[x.x1 - col_lo]))
            if len(found) >= agree and len(set(found[-agree:])) == 1:
                return AsymptoticRootRecord(
                    root=found[-1],
                    stabilized=True,
                    checkpoints=tuple(cks[: len(found)]),
                    roots=tuple(found),
                )
    return AsymptoticRootRecord(
        root=None, stabilized=False, checkpoints=tuple(cks), roots=tuple(found)
    )


def asymptotic_root(
    grid: WeightGrid,
    sub: Substrate,
    a: float,
    checkpoints: Sequence[int],
    agree: int = 3,
) -> AsymptoticRootRecord:
    return asymptotic_root_fn(grid.level_weights, sub, a, checkpoints, agree)


# ---------------------------------------------------------------------------
# Coalescence of point-to-point geodesics toward a far diagonal target
# ---------------------------------------------------------------------------


def _backtrack_cols(field: np.ndarray, i: int, j: int) -> np.ndarray:
    """Column index of the argmax path at each antidiagonal level <= i + j."""
    cols = np.empty(i + j + 1, dtype=np.int64)
    while True:
        cols[i + j] = i
        if i == 0 and j == 0:
            return cols
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        elif field[i - 1, j] >= field[i, j - 1]:
            i -= 1
        else:
            j -= 1


def coalescence_time(weights: np.ndarray, m: int, n: int) -> CoalescenceRecord:
    """T(m): second coordinate of the first common vertex of the geodesics
    from (0, 0) and (m, 0) to (n, n).

    Computed in reversed coordinates, where both geodesics become paths
    from one source and the first common vertex becomes their split
    point; one DP field serves both backtracks. A record that merged
    only at the target itself is flagged as not coalesced in the box.
    """
    if m < 0 or n < max(m, 1):
        raise ConfigError("need 0 <= m <= n")
    w = weights[: n + 1, : n + 1]
    if w.shape != (n + 1, n + 1):
        raise ConfigError("weight array too small for the requested box")
    field = _lpp_field(w[::-1, ::-1])
    ca = _backtrack_cols(field, n, n)
    cb = _backtrack_cols(field, n - m, n)
    k = cb.size
    diff = ca[:k] != cb[:k]
    s_star = int(np.argmax(diff)) - 1 if diff.any() else k - 1
    t = n - (s_star - int(ca[s_star]))
    return CoalescenceRecord(t=t, merged_before_target=s_star > 0)


# ---------------------------------------------------------------------------
# Weighted substrate: row DP with prefix maxima
# ---------------------------------------------------------------------------


def _row_advance(
    u_prev: np.ndarray, lab_prev: np.ndarray, w_row: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """V_r(c) = ps(c) + max_{j <= c}(u_prev(j) - ps(j - 1)); labels follow
    the first (smallest-index) maximiser."""
    ps = np.cumsum(w_row)
    a = u_prev.copy()
    a[1:] -= ps[:-1]
    cm = np.maximum.accumulate(a)
    prev = np.empty_like(cm)
    prev[0] = -np.inf
    prev[1:] = cm[:-1]
    pos = np.maximum.accumulate(np.where(a > prev, np.arange(a.size), -1))
    return ps + cm, lab_prev[pos]


def weighted_point_to_line(
    grid: WeightGrid, wsub: WeightedSubstrate, x: int, n: int
) -> tuple[float, int]:
    """max_{k <= x} { nu(k) + L((k, 1), (x, n)) } and its argmax.

    Uses the whole weighted-substrate window left of x; an argmax on the
    window edge is window exhaustion and raises.
    """
    if n < 1:
        raise ConfigError("n must be >= 1")
    if x > wsub.k_hi:
        raise WindowError("x outside weighted-substrate window")
    k_lo = wsub.k_lo
    u = wsub.values(k_lo, x).astype(float)
    lab = np.arange(k_lo, x + 1, dtype=np.int64)
    for row in range(1, n + 1):
        w_row = grid.box((k_lo, row), (x, row))[:, 0]
        u, lab = _row_advance(u, lab, w_row)
    value, k_star = float(u[-1]), int(lab[-1])
    if k_star == k_lo:
        raise WindowError("weighted-substrate window exhausted (argmax on edge)")
    return value, k_star


def weighted_tree_height(
    grid: WeightGrid,
    wsub: WeightedSubstrate,
    k: int = 0,
    n_max: int = 64,
) -> HeightRecord:
    """Height of the weighted-substrate tree rooted at k: the largest row n
    with a cell (x, n) whose maximiser is k; 0 when k owns nothing.

    The caller is responsible for a window wide enough that truncation
    bias is negligible for the root k (margins of a few n_max^{2/3}).
    """
    if n_max < 1:
        raise ConfigError("n_max must be >= 1")
    u = wsub.nu.astype(float)
    lab = np.arange(wsub.k_lo, wsub.k_hi + 1, dtype=np.int64)
    height = 0
    for row in range(1, n_max + 1):
        w_row = grid.box((wsub.k_lo, row), (wsub.k_hi, row))[:, 0]
        u, lab = _row_advance(u, lab, w_row)
        if not np.any(lab == k):
            return HeightRecord(corner=k, height=height, censored=False)
        height = row
    return HeightRecord(corner=k, height=n_max, censored=True)


def weighted_max_height_stream(
    rng: np.random.Generator, m: int, n_max: int, margin: int, p: float = 0.5
) -> tuple[int, bool]:
    """H(m) of the flat weighted model: the last row owned by a root in
    (0, m], censored at n_max. This is the height that matches the
    coalescence time T(m) in law."""
    if m < 1 or n_max < 1 or margin < 1:
        raise ConfigError("m, n_max and margin must be >= 1")
    k_lo, k_hi = -margin, n_max + m + margin
    rate = 1.0 - p
    nu = np.empty(k_hi - k_lo + 1)
    nu[:margin] = -np.cumsum(exp1(rng, margin)[::-1] / rate)[::-1]
    nu[margin] = 0.0
    nu[margin + 1 :] = np.cumsum(exp1(rng, k_hi) / rate)
    u = nu
    lab = np.arange(k_lo, k_hi + 1, dtype=np.int64)
    height = 0
    for row in range(1, n_max + 1):
        u, lab = _row_advance(u, lab, exp1(rng, u.size))
        if not np.any((lab >= 1) & (lab <= m)):
            return height, False
        height = row
    return n_max, True


def weighted_tree_height_stream(
    rng: np.random.Generator, n_max: int, margin: int, p: float = 0.5
) -> HeightRecord:
    """Streamed flat weighted-substrate height (drifts mu = 1/(1-p) both
    sides), drawing nu and the rows lazily; root 0, censored at n_max.

    Draw order is fixed (nu left, nu right, then rows ascending), so a
    seeded generator reproduces the record exactly.
    """
    if n_max < 1 or margin < 1:
        raise ConfigError("n_max and margin must be >= 1")
    k_lo, k_hi = -margin, n_max + margin
    rate = 1.0 - p
    nu = np.empty(k_hi - k_lo + 1)
    nu[:margin] = -np.cumsum(exp1(rng, margin)[::-1] / rate)[::-1]
    nu[margin] = 0.0
    nu[margin + 1 :] = np.cumsum(exp1(rng, k_hi) / rate)
    u = nu
    lab = np.arange(k_lo, k_hi + 1, dtype=np.int64)
    height = 0
    for row in range(1, n_max + 1):
        u, lab = _row_advance(u, lab, exp1(rng, u.size))
        if not np.any(lab == 0):
            return HeightRecord(corner=0, height=height, censored=False)
        height = row
    return HeightRecord(corner=0, height=n_max, censored=True)
