"""Down-right substrates: growth initial conditions for geodesic forests.

A substrate is a bi-infinite down-right lattice path anchored at the
origin, materialised on a finite index window [z_lo, z_hi]. Walking the
index upward the path steps by e1 (right) or -e2 (down); concave corners
are vertices entered by a down step and left by a right step, and they
are the only possible geodesic roots. The asymptotic slopes lambda-
(left) and lambda+ (right) with lambda- > lambda+ > 0 define the concave
wedge; the rarefaction interval of directions is (lambda+^2, lambda-^2).

Families provided: Bernoulli (random, slope p/(1-p) per side), periodic
(k+ rights then one down, and the mirror image), the three-corner finite
rooted shape, and the flat diagonal whose corners are {(z, -z)}.

A weighted substrate replaces the path geometry by cumulated weights
nu(k) along the horizontal axis, with drifts mu- > mu+ > 1.

Window exhaustion is always a raised error, never silent truncation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import ConfigError, WindowError
from .lattice import Point, as_point, exp1, make_rng

NO_ROOT = np.iinfo(np.int64).min // 2


@dataclass(frozen=True)
class Substrate:
    """Finite window of a down-right path with its concave corners.

    positions[i] is phi_{z_lo + i}; phi_0 = (0, 0). Corners are labelled
    by ordinal: ordinal 0 is the corner at substrate index 0 (present in
    every family here), negative ordinals sit left of the origin.
    """

    z_lo: int
    z_hi: int
    positions: np.ndarray  # shape (z_hi - z_lo + 1, 2), int64
    lambda_minus: float
    lambda_plus: float
    kind: str = "custom"
    corners_z: np.ndarray = field(init=False, repr=False)
    _origin_ord: int = field(init=False, repr=False)
    _colmin: np.ndarray = field(init=False, repr=False)  # running min height per column
    _col0: int = field(init=False, repr=False)

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.int64)
        if pos.shape != (self.z_hi - self.z_lo + 1, 2):
            raise ConfigError("positions shape does not match index window")
        if self.z_lo > 0 or self.z_hi < 0 or tuple(pos[-self.z_lo]) != (0, 0):
            raise ConfigError("substrate must be anchored at phi_0 = (0, 0)")
        steps = np.diff(pos, axis=0)
        ok = ((steps[:, 0] == 1) & (steps[:, 1] == 0)) | (
            (steps[:, 0] == 0) & (steps[:, 1] == -1)
        )
        if not ok.all():
            raise ConfigError("substrate steps must be e1 or -e2")
        object.__setattr__(self, "positions", pos)
        # corner at z: step into z is down, step out is right
        down_in = (steps[:, 1] == -1)[:-1]
        right_out = (steps[:, 0] == 1)[1:]
        corner_idx = np.nonzero(down_in & right_out)[0] + 1  # position index
        corners_z = corner_idx + self.z_lo
        object.__setattr__(self, "corners_z", corners_z)
        at0 = np.nonzero(corners_z == 0)[0]
        object.__setattr__(self, "_origin_ord", int(at0[0]) if at0.size else -1)
        # per-column minimum substrate height, cumulative from the left
        col0 = int(pos[:, 0].min())
        ncol = int(pos[:, 0].max()) - col0 + 1
        colmin = np.full(ncol, np.iinfo(np.int64).max, dtype=np.int64)
        np.minimum.at(colmin, pos[:, 0] - col0, pos[:, 1])
        object.__setattr__(self, "_colmin", np.minimum.accumulate(colmin))
        object.__setattr__(self, "_col0", col0)

    # -- basic accessors -------------------------------------------------

    def position(self, z: int) -> Point:
        if not self.z_lo <= z <= self.z_hi:
            raise WindowError(f"substrate index {z} outside window")
        p = self.positions[z - self.z_lo]
        return Point(int(p[0]), int(p[1]))

    def steps(self) -> np.ndarray:
        """Forward steps; row i is phi_{z_lo+i+1} - phi_{z_lo+i}."""
        return np.diff(self.positions, axis=0)

    @property
    def n_corners(self) -> int:
        return int(self.corners_z.size)

    @property
    def has_origin_corner(self) -> bool:
        return self._origin_ord >= 0

    def _require_origin(self):
        if not self.has_origin_corner:
            raise ConfigError("operation requires a concave corner at the origin")

    def corner_ordinals(self) -> np.ndarray:
        """Ordinals of all windowed corners, ascending."""
        self._require_origin()
        return np.arange(self.n_corners) - self._origin_ord

    def corner_index(self, ordinal: int) -> int:
        """Substrate index z of a corner ordinal."""
        self._require_origin()
        i = ordinal + self._origin_ord
        if not 0 <= i < self.n_corners:
            raise WindowError(f"corner ordinal {ordinal} outside window")
        return int(self.corners_z[i])

    def corner_position(self, ordinal: int) -> Point:
        return self.position(self.corner_index(ordinal))

    def corner_positions(self) -> np.ndarray:
        """Positions of all windowed corners, by ascending ordinal."""
        return self.positions[self.corners_z - self.z_lo]

    def corners_below(self, x) -> np.ndarray:
        """Ordinals of corners strictly dominated by x (the candidate roots)."""
        x = as_point(x)
        pos = self.corner_positions()
        sel = (pos[:, 0] < x.x1) & (pos[:, 1] < x.x2)
        return np.nonzero(sel)[0] - self._origin_ord

    # -- growth region ---------------------------------------------------

    def bottom_profile(self, col_lo: int, col_hi: int) -> np.ndarray:
        """B(c) = 1 + min substrate height over columns <= c - 1.

        (c, r) lies in the growth region iff r >= B(c). +inf marks
        columns with no dominated vertex inside the window; columns right
        of the window raise, because the unsimulated substrate there
        could still be dominated.
        """
        if col_hi - 1 > self._col0 + self._colmin.size - 1:
            raise WindowError("substrate window exhausted on the right")
        c = np.arange(col_lo, col_hi + 1)
        i = c - 1 - self._col0
        out = np.full(c.size, np.inf)
        ok = i >= 0
        out[ok] = self._colmin[i[ok]] + 1.0
        return out

    def in_growth_region(self, p) -> bool:
        p = as_point(p)
        b = self.bottom_profile(p.x1, p.x1)[0]
        return bool(p.x2 >= b)

    # -- serialization ---------------------------------------------------

    def step_string(self) -> str:
        """One character per edge, ascending substrate index, anchored at 0.

        Edge z joins phi_{z-1} to phi_z. Right-of-anchor edges (z >= 1)
        use R (e1) / D (-e2); left-of-anchor edges (z <= 0) use the
        outward view from the anchor: U if phi_{z-1} - phi_z = e2, else L.
        """
        chars = []
        steps = self.steps()
        for k, (dx, dy) in enumerate(steps):
            z = self.z_lo + 1 + k
            if z >= 1:
                chars.append("R" if dx == 1 else "D")
            else:
                chars.append("U" if dy == -1 else "L")
        return "".join(chars)

    @classmethod
    def from_step_string(
        cls, s: str, lambda_minus=float("nan"), lambda_plus=float("nan"), kind="custom"
    ) -> "Substrate":
        if not s or any(ch not in "RDUL" for ch in s):
            raise ConfigError("step string must be non-empty over R/D/U/L")
        n_left = 0
        while n_left < len(s) and s[n_left] in "UL":
            n_left += 1
        if any(ch in "UL" for ch in s[n_left:]):
            raise ConfigError("U/L characters must all precede R/D characters")
        z_lo, z_hi = -n_left, len(s) - n_left
        pos = np.zeros((len(s) + 1, 2), dtype=np.int64)
        cur = np.zeros(2, dtype=np.int64)
        for k in range(n_left, len(s)):
            cur = cur + ((1, 0) if s[k] == "R" else (0, -1))
            pos[k + 1] = cur
        cur = np.zeros(2, dtype=np.int64)
        for k in range(n_left - 1, -1, -1):
            cur = cur + ((0, 1) if s[k] == "U" else (-1, 0))
            pos[k] = cur
        return cls(z_lo=z_lo, z_hi=z_hi, positions=pos,
                   lambda_minus=lambda_minus, lambda_plus=lambda_plus, kind=kind)


def _positions_from_forward_steps(left_steps: Iterable, right_steps: Iterable) -> np.ndarray:
    """Assemble positions from outward left steps and forward right steps.

    left_steps yields phi_{z-1} - phi_z for z = 0, -1, ...; right_steps
    yields phi_z - phi_{z-1} for z = 1, 2, ...
    """
    left = list(left_steps)
    right = list(right_steps)
    pos = np.zeros((len(left) + len(right) + 1, 2), dtype=np.int64)
    cur = np.zeros(2, dtype=np.int64)
    for k, st in enumerate(right):
        cur = cur + st
        pos[len(left) + 1 + k] = cur
    cur = np.zeros(2, dtype=np.int64)
    for k, st in enumerate(left):
        cur = cur + st
        pos[len(left) - 1 - k] = cur
    return pos


def gen_bernoulli(p_minus: float, p_plus: float, window: int, seed) -> Substrate:
    """Random substrate: right side steps down w.p. p+, left side up w.p. p-.

    The local pattern phi_{-1} = e2, phi_1 = e1 is forced, so the origin
    is always a concave corner. window counts edges per side.
    """
    if not (0.0 <= p_plus < p_minus <= 1.0):
        raise ConfigError("need 0 <= p_plus < p_minus <= 1")
    if window < 1:
        raise ConfigError("window must be >= 1")
    rng = make_rng(seed)
    up = np.array([0, 1])
    left = np.array([-1, 0])
    right = np.array([1, 0])
    down = np.array([0, -1])
    # edge z = 0 forced U; edges z = -1 .. -(window-1) random
    l_draw = rng.random(window - 1) < p_minus
    left_steps = [up] + [up if b else left for b in l_draw]
    # edge z = 1 forced R; edges z = 2 .. window random
    r_draw = rng.random(window - 1) < p_plus
    right_steps = [right] + [down if b else right for b in r_draw]
    lam_minus = math_inf_div(p_minus, 1.0 - p_minus)
    lam_plus = math_inf_div(p_plus, 1.0 - p_plus)
    return Substrate(
        z_lo=-window, z_hi=window,
        positions=_positions_from_forward_steps(left_steps, right_steps),
        lambda_minus=lam_minus, lambda_plus=lam_plus, kind="bernoulli",
    )


def math_inf_div(num: float, den: float) -> float:
    return float("inf") if den == 0.0 else num / den


def gen_periodic(k_plus: int, k_minus: int, window: int) -> Substrate:
    """Deterministic periodic substrate: k+ rights then one down on the
    right side, k- ups then one left on the left side. Slopes are
    lambda+ = 1/k+ and lambda- = k-. window counts periods per side."""
    if k_plus < 1 or k_minus < 1:
        raise ConfigError("periods must be >= 1")
    if max(k_plus, k_minus) < 2:
        raise ConfigError("need max(k_plus, k_minus) >= 2")
    if window < 1:
        raise ConfigError("window must be >= 1")
    up = np.array([0, 1])
    left = np.array([-1, 0])
    right = np.array([1, 0])
    down = np.array([0, -1])
    left_steps = ([up] * k_minus + [left]) * window
    right_steps = ([right] * k_plus + [down]) * window
    return Substrate(
        z_lo=-window * (k_minus + 1), z_hi=window * (k_plus + 1),
        positions=_positions_from_forward_steps(left_steps, right_steps),
        lambda_minus=float(k_minus), lambda_plus=1.0 / k_plus, kind="periodic",
    )


def gen_finite_rooted(m: int, pad: int = 4) -> Substrate:
    """Three-corner substrate: corners at (-1, 1), (0, 0) and (m, -1).

    Right side runs along the axis through (1,0)..(m,0), drops one row,
    then continues right; the left side climbs the column x1 = -1. pad
    extends the window beyond the last corner on each side."""
    if m < 1:
        raise ConfigError("m must be >= 1")
    up = np.array([0, 1])
    left = np.array([-1, 0])
    right = np.array([1, 0])
    down = np.array([0, -1])
    left_steps = [up, left] + [up] * (pad + 1)
    right_steps = [right] * m + [down] + [right] * (pad + 1)
    return Substrate(
        z_lo=-(pad + 3), z_hi=m + pad + 2,
        positions=_positions_from_forward_steps(left_steps, right_steps),
        lambda_minus=float("inf"), lambda_plus=0.0, kind="finite_rooted",
    )


def gen_flat_diagonal(window: int) -> Substrate:
    """Flat substrate whose corners are exactly {(z, -z), |z| <= window}."""
    if window < 1:
        raise ConfigError("window must be >= 1")
    up = np.array([0, 1])
    left = np.array([-1, 0])
    right = np.array([1, 0])
    down = np.array([0, -1])
    l = []
    for _ in range(window):
        l.extend([up, left])
    l.append(up)
    r = []
    for _ in range(window):
        r.extend([right, down])
    r.append(right)
    return Substrate(
        z_lo=-(2 * window + 1), z_hi=2 * window + 1,
        positions=_positions_from_forward_steps(l, r),
        lambda_minus=1.0, lambda_plus=1.0, kind="flat",
    )


@dataclass(frozen=True)
class WeightedSubstrate:
    """Cumulated substrate weights nu(k) on a window, nu(0) = 0.

    nu is nondecreasing with nonnegative increments on k > 0 and
    nonpositive values on k < 0; drifts satisfy mu- > mu+ > 1.
    """

    k_lo: int
    k_hi: int
    nu: np.ndarray  # nu[k - k_lo] = nu(k)
    mu_minus: float
    mu_plus: float

    def __post_init__(self):
        v = np.asarray(self.nu, dtype=float)
        if v.shape != (self.k_hi - self.k_lo + 1,):
            raise ConfigError("nu shape does not match window")
        if self.k_lo > 0 or self.k_hi < 0 or v[-self.k_lo] != 0.0:
            raise ConfigError("nu(0) must be 0 inside the window")
        if np.any(np.diff(v) < 0):
            raise ConfigError("nu must have nonnegative increments")
        object.__setattr__(self, "nu", v)
        v.flags.writeable = False

    def value(self, k: int) -> float:
        if not self.k_lo <= k <= self.k_hi:
            raise WindowError(f"weighted-substrate index {k} outside window")
        return float(self.nu[k - self.k_lo])

    def values(self, k_lo: int, k_hi: int) -> np.ndarray:
        if k_lo < self.k_lo or k_hi > self.k_hi:
            raise WindowError("weighted-substrate window exhausted")
        return self.nu[k_lo - self.k_lo : k_hi - self.k_lo + 1]


def gen_weighted_exponential(
    p_minus: float, p_plus: float, window: int, seed
) -> WeightedSubstrate:
    """Exponential weighted substrate: increments Exp(1-p+) on k > 0 and
    Exp(1-p-) on k < 0, giving drifts mu+- = 1/(1-p+-).

    Equal parameters are allowed; that is the flat weighted model whose
    tree heights are heavy-tailed (no rarefaction interval)."""
    if not (0.0 < p_plus <= p_minus < 1.0):
        raise ConfigError("need 0 < p_plus <= p_minus < 1")
    if window < 1:
        raise ConfigError("window must be >= 1")
    rng = make_rng(seed)
    inc_pos = exp1(rng, window) / (1.0 - p_plus)
    inc_neg = exp1(rng, window) / (1.0 - p_minus)
    nu = np.zeros(2 * window + 1)
    nu[window + 1 :] = np.cumsum(inc_pos)
    nu[:window] = -np.cumsum(inc_neg[::-1])[::-1]
    return WeightedSubstrate(
        k_lo=-window, k_hi=window, nu=nu,
        mu_minus=1.0 / (1.0 - p_minus), mu_plus=1.0 / (1.0 - p_plus),
    )
