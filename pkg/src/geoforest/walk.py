"""The dual random walk whose global argmax has the law of the root.

Along the substrate edges, a two-sided walk S(z) is built from signed
exponentials: on the positive side a right-step edge contributes
-Exp(1 - rho_a) and a down-step edge +Exp(rho_a); the signs flip on the
negative side. Inside the rarefaction interval both sides drift down, so
the walk has an a.s. finite global maximum M and argmax location Z, and
Z is distributed like the index of the asymptotic root of direction
(1, a).

Concave corners are local maxima of S, so the maximum over the full walk
equals the maximum over the corner subwalk S^+-_n = S(z_+-n), whose
increments are the sums of edge increments between consecutive corners.

Truncation certification: once a side has fallen `margin` below its
running maximum, the probability that its unseen continuation ever beats
the recorded maximum is at most (1 - gamma/delta) exp(-gamma * gap);
with margin = safety/gamma (default safety 40) the escape probability is
below e^-40. When no Lundberg exponent is available the fallback margin
is 60/|mean drift| and the reported bound uses the diffusion proxy
gamma_hat = 2|mean|/variance.

The Lindley companion process W_{-n} = (W_{-n-1} + X_{n+1})^+ started at
the horizon reproduces (Z, M) pathwise as (tau, W_0) with
tau = min{n : W_{-n} = 0}; the conditioned sampler below turns that
identity into an acceptance-rejection estimator of the joint law of
(Z, M) from walks that have not yet hit (-inf, 0].
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .analytics import QueueParams, rho
from .errors import CertificationError, ConfigError
from .lattice import exp1, make_rng
from .substrate import Substrate


@dataclass(frozen=True)
class TwoSidedWalk:
    """S(z) over the substrate window, S(0) = 0."""

    a: float
    rho: float
    z_lo: int
    z_hi: int
    values: np.ndarray
    substrate: Substrate

    def value(self, z: int) -> float:
        if not self.z_lo <= z <= self.z_hi:
            raise ConfigError(f"walk index {z} outside window")
        return float(self.values[z - self.z_lo])


@dataclass(frozen=True)
class CornerWalk:
    """The walk restricted to concave corners, by ordinal from 0 outward.

    plus[n] = S(z_n) and minus[n] = S(z_-n); both start at 0. end_plus
    and end_minus carry the parent walk's final values, used for sharper
    truncation certificates.
    """

    plus: np.ndarray
    minus: np.ndarray
    end_plus: float
    end_minus: float

    def increments(self, side: str) -> np.ndarray:
        arr = self.plus if side == "+" else self.minus
        return np.diff(arr)


@dataclass(frozen=True)
class MaxArgRecord:
    """Global maximum and signed argmax ordinal of a truncated walk."""

    m: float
    z: int
    horizon_plus: int
    horizon_minus: int
    certified_bound: float


def build_walk(sub: Substrate, a: float, seed) -> TwoSidedWalk:
    """Realise S^{a, phi} on the substrate window from per-edge exponentials."""
    r = rho(a)
    rng = make_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    steps = sub.steps()  # row k is the forward step of edge z = z_lo + 1 + k
    n_edges = steps.shape[0]
    e = exp1(rng, n_edges)
    z_of_edge = np.arange(sub.z_lo + 1, sub.z_hi + 1)
    is_right = steps[:, 0] == 1
    rate = np.where(is_right, 1.0 - r, r)
    sign = np.where(
        z_of_edge >= 1,
        np.where(is_right, -1.0, 1.0),
        np.where(is_right, 1.0, -1.0),
    )
    x = sign * e / rate
    values = np.empty(n_edges + 1)
    i0 = -sub.z_lo  # index of z = 0
    values[i0] = 0.0
    if sub.z_hi >= 1:
        values[i0 + 1 :] = np.cumsum(x[i0:])
    if sub.z_lo <= -1:
        # S(z) = sum_{k=z+1}^{0} X_k for z < 0: suffix sums of the left edges
        values[:i0] = np.cumsum(x[:i0][::-1])[::-1]
    return TwoSidedWalk(
        a=a, rho=r, z_lo=sub.z_lo, z_hi=sub.z_hi, values=values, substrate=sub
    )


def corner_subwalk(walk: TwoSidedWalk) -> CornerWalk:
    """Restrict the walk to its concave corners (ordinal parametrisation)."""
    sub = walk.substrate
    ords = sub.corner_ordinals()
    zs = sub.corners_z
    vals = walk.values[zs - walk.z_lo]
    plus = np.concatenate(([0.0], vals[ords > 0]))
    minus = np.concatenate(([0.0], vals[ords < 0][::-1]))
    return CornerWalk(
        plus=plus,
        minus=minus,
        end_plus=float(walk.values[-1]),
        end_minus=float(walk.values[0]),
    )


def _side_max(values: np.ndarray) -> tuple[float, int]:
    i = int(np.argmax(values))  # first occurrence: smallest ordinal on ties
    return float(values[i]), i


def _fallback_gamma(increments: np.ndarray) -> tuple[float, float]:
    mean = float(np.mean(increments)) if increments.size else 0.0
    var = float(np.var(increments)) if increments.size > 1 else 0.0
    if mean >= 0 or var == 0.0:
        raise CertificationError("cannot certify: drift not clearly negative")
    return 60.0 / abs(mean), 2.0 * abs(mean) / var


def max_and_argmax(
    walk: TwoSidedWalk | CornerWalk,
    safety: float = 40.0,
    params: tuple[QueueParams, QueueParams] | None = None,
) -> MaxArgRecord:
    """(M, Z) of the truncated walk with an escape-probability certificate.

    Z is the signed corner ordinal; ties across sides resolve toward the
    smaller |ordinal|, then toward the positive side. Raises
    CertificationError when either side has not fallen far enough below
    the recorded maximum.
    """
    cw = corner_subwalk(walk) if isinstance(walk, TwoSidedWalk) else walk
    mp, ip = _side_max(cw.plus)
    mm, im = _side_max(cw.minus)
    if mp > mm or (mp == mm and ip <= im):
        m, z = mp, ip
    else:
        m, z = mm, -im
    bound = 0.0
    for side, end in (("+", cw.end_plus), ("-", cw.end_minus)):
        gap = m - end
        if params is not None:
            qp = params[0] if side == "+" else params[1]
            margin = safety / qp.gamma
            side_bound = (1.0 - qp.atom) * np.exp(-qp.gamma * gap)
        else:
            margin, gamma_hat = _fallback_gamma(cw.increments(side))
            side_bound = float(np.exp(-gamma_hat * gap))
        if gap < margin:
            raise CertificationError(
                f"side {side} not certified: gap {gap:.3g} < margin {margin:.3g}"
            )
        bound += side_bound
    return MaxArgRecord(
        m=m,
        z=z,
        horizon_plus=cw.plus.size - 1,
        horizon_minus=cw.minus.size - 1,
        certified_bound=bound,
    )


def lindley_process(increments: np.ndarray, horizon: int | None = None) -> np.ndarray:
    """W_{-n} for n = 0..H from the recursion W_{-n} = (W_{-n-1} + X_{n+1})^+,
    started at W_{-H} = 0 (i.e. the walk is treated as stopped at H).

    Equivalently W_{-n} = max_{n <= k <= H} S_k - S_n, so on a certified
    window (tau, W_0) = (Z, M) pathwise.
    """
    x = np.asarray(increments, dtype=float)
    h = x.size if horizon is None else int(horizon)
    if h < 1 or h > x.size:
        raise ConfigError("horizon must be in [1, len(increments)]")
    w = np.empty(h + 1)
    w[h] = 0.0
    for n in range(h - 1, -1, -1):
        w[n] = max(0.0, w[n + 1] + x[n])
    return w


def lindley_tau_w0(increments: np.ndarray) -> tuple[int, float]:
    """(tau, W_0): first zero of the Lindley sequence and its start value."""
    w = lindley_process(increments)
    tau = int(np.argmax(w == 0.0))
    return tau, float(w[0])


# ---------------------------------------------------------------------------
# Vectorised samplers of truncated maxima
# ---------------------------------------------------------------------------


def sample_onesided_max(
    law,
    n_samples: int,
    rng: np.random.Generator,
    safety: float = 40.0,
    block: int = 256,
    max_steps: int = 10_000_000,
) -> tuple[np.ndarray, np.ndarray]:
    """(M, Z) for n_samples independent one-sided walks with step `law`.

    Walks are extended in blocks until each has dropped safety/gamma
    below its running maximum, so every returned maximum is certified to
    escape probability about e^-safety.
    """
    qp = law.queue_params()
    margin = safety / qp.gamma
    m = np.zeros(n_samples)
    z = np.zeros(n_samples, dtype=np.int64)
    s_cur = np.zeros(n_samples)
    active = np.arange(n_samples)
    n_off = 0
    while active.size:
        if n_off > max_steps:
            raise CertificationError("walks failed to certify within max_steps")
        x = law.sample(rng, (active.size, block))
        cs = s_cur[active, None] + np.cumsum(x, axis=1)
        bi = np.argmax(cs, axis=1)
        bm = cs[np.arange(active.size), bi]
        upd = bm > m[active]
        idx = active[upd]
        m[idx] = bm[upd]
        z[idx] = n_off + bi[upd] + 1
        s_cur[active] = cs[:, -1]
        active = active[m[active] - s_cur[active] < margin]
        n_off += block
    return m, z


def sample_twosided_max(
    law_plus,
    law_minus,
    n_samples: int,
    rng: np.random.Generator,
    safety: float = 40.0,
) -> tuple[np.ndarray, np.ndarray]:
    """(M, Z) of two-sided walks; Z is the signed ordinal, ties toward the
    smaller |ordinal| then the positive side."""
    mp, zp = sample_onesided_max(law_plus, n_samples, rng, safety)
    mm, zm = sample_onesided_max(law_minus, n_samples, rng, safety)
    plus_wins = (mp > mm) | ((mp == mm) & (zp <= zm))
    m = np.where(plus_wins, mp, mm)
    z = np.where(plus_wins, zp, -zm)
    return m, z


@dataclass(frozen=True)
class ConditionedSample:
    """Acceptance-rejection estimate of the joint law of (Z, M).

    survival[n-1] estimates P(N > n) = P(S_1 > 0, ..., S_n > 0); p_z[n]
    estimates P(Z = n) = P(N > n) P(M = 0) for n >= 1 with
    p_z[0] = P(M = 0) exactly (supplied). accepted[n] holds the S_n
    values of paths alive at step n, an estimate of the conditional
    density of M given Z = n up to the same constant.
    """

    n_top: int
    p_m0: float
    proposals: int
    survival: np.ndarray
    p_z: np.ndarray
    accepted: dict[int, np.ndarray]
    acceptance_rate: float


def conditioned_sampler(
    law,
    n_top: int,
    n_samples: int,
    p_m0: float,
    rng: np.random.Generator,
    keep_values: tuple[int, ...] = (),
    min_acceptance: float = 0.0,
) -> ConditionedSample:
    """Simulate walks conditioned on not yet hitting (-inf, 0] by whole-path
    rejection; no importance weighting.

    Raises CertificationError if the acceptance rate at n_top falls below
    min_acceptance (reported with the rate)."""
    if n_top < 1 or n_samples < 1:
        raise ConfigError("n_top and n_samples must be >= 1")
    if not 0.0 < p_m0 <= 1.0:
        raise ConfigError("p_m0 must lie in (0, 1]")
    s = np.cumsum(law.sample(rng, (n_samples, n_top)), axis=1)
    alive = np.logical_and.accumulate(s > 0.0, axis=1)
    survival = alive.mean(axis=0)
    rate = float(survival[-1])
    if rate < min_acceptance:
        raise CertificationError(
            f"acceptance rate {rate:.3g} at n={n_top} below floor {min_acceptance:g}"
        )
    p_z = np.concatenate(([p_m0], survival * p_m0))
    accepted = {
        int(n): s[alive[:, n - 1], n - 1].copy() for n in keep_values if 1 <= n <= n_top
    }
    return ConditionedSample(
        n_top=n_top,
        p_m0=p_m0,
        proposals=n_samples,
        survival=survival,
        p_z=p_z,
        accepted=accepted,
        acceptance_rate=rate,
    )
