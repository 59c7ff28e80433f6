"""Closed forms for the computable substrate families.

For a direction (1, a) the dual random walk has per-corner step laws
with an exponential right tail: density b * delta * exp(-delta x) on
x > 0, with b = P(X > 0). When the Lundberg exponent gamma > 0 (the
positive root of E e^{gamma X} = 1) exists, the global maximum M of the
one-sided walk satisfies

    P(M = 0) = gamma / delta,
    P(M > x) = (1 - gamma / delta) * exp(-gamma x),

the classic waiting-time law of the associated queue. Root-location
probabilities multiply the two one-sided atoms.

Families:
  * Bernoulli substrate -- M/M/1: step Exp((1-p+)rho) - Exp(p+(1-rho))
    on the plus side (geometric sums of edge exponentials collapse),
    giving P(M+ = 0) = 1 - lambda+/sqrt(a) and the product root law.
  * Periodic substrate -- G/M/1: step Exp(rho) - Gamma(k+, 1-rho); the
    atom is 1 - alpha with alpha the smallest positive solution of
    alpha (1 - rho alpha)^k = (1 - rho)^k (mirrored on the minus side).
  * Finite rooted substrate -- a single gamma-vs-exponential race per
    side; and the total finiteness probability 2/(m+2).
  * Exponential weighted substrate -- step Exp(1-p+) - Exp(1-rho).

The joint transform of (|Z|, M) for a two-sided walk is assembled from
the Spitzer series

    A(s, u) = exp( sum_{n>=1} (s^n/n) E[e^{u S_n}; S_n > 0] ),

with phi(s, u) = (gamma/delta) (A(s, u) - 1) the one-sided transform of
(Z, M) on Z >= 1; the damping of each side by the other side's maximum
tail brings in the opposite side's (gamma, delta). Per-term expectations
are estimated by shared-sample Monte Carlo, one pool of paths reused
across every n and every u argument.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CertificationError, ConfigError
from .lattice import exp1, make_rng


def rho(a: float) -> float:
    """sqrt(a) / (1 + sqrt(a)), the queue intensity of direction (1, a)."""
    if a <= 0:
        raise ConfigError("slope a must be positive")
    r = math.sqrt(a)
    return r / (1.0 + r)


@dataclass(frozen=True)
class QueueParams:
    """Exponential right-tail rate, Lundberg exponent and P(X > 0)."""

    delta: float
    gamma: float
    b: float

    def __post_init__(self):
        if not (0.0 < self.gamma <= self.delta):
            raise ConfigError("need 0 < gamma <= delta (inside rarefaction)")
        if not 0.0 < self.b < 1.0:
            raise ConfigError("b must lie in (0, 1)")

    @property
    def atom(self) -> float:
        """P(M = 0) = gamma / delta."""
        return self.gamma / self.delta


def max_atom(params: QueueParams) -> float:
    return params.atom


def max_tail(params: QueueParams, x: float) -> float:
    """P(M > x) for x >= 0."""
    if x < 0:
        raise ConfigError("x must be >= 0")
    return (1.0 - params.atom) * math.exp(-params.gamma * x)


def mm1_params(p: float, a: float, side: str) -> QueueParams:
    """Queue parameters of one side of the Bernoulli-substrate walk.

    Plus side (probability of a down step p = p+):
        delta = (1-p) rho_a,  gamma = (1-p) rho_a - p (1-rho_a).
    Minus side (probability of an up step p = p-):
        delta = p (1-rho_a),  gamma = p (1-rho_a) - (1-p) rho_a.
    """
    r = rho(a)
    if side == "+":
        delta, other = (1.0 - p) * r, p * (1.0 - r)
    elif side == "-":
        delta, other = p * (1.0 - r), (1.0 - p) * r
    else:
        raise ConfigError("side must be '+' or '-'")
    gamma = delta - other
    if gamma <= 0:
        raise ConfigError("gamma <= 0: slope outside the rarefaction interval")
    return QueueParams(delta=delta, gamma=gamma, b=other / (delta + other))


def bernoulli_root_prob(a: float, p_minus: float, p_plus: float) -> float:
    """P(root of direction (1, a) is the origin corner) for the Bernoulli
    substrate: (1 - lambda+/sqrt(a)) (1 - sqrt(a)/lambda-)."""
    lam_plus = p_plus / (1.0 - p_plus) if p_plus < 1 else math.inf
    lam_minus = p_minus / (1.0 - p_minus) if p_minus < 1 else math.inf
    if not lam_plus**2 < a < lam_minus**2:
        raise ConfigError("slope outside the rarefaction interval")
    ra = math.sqrt(a)
    right = 1.0 - lam_plus / ra
    left = 1.0 if lam_minus == math.inf else 1.0 - ra / lam_minus
    return right * left


def bernoulli_optimal_slope(p_minus: float, p_plus: float) -> float:
    """The slope maximising the root probability: a = lambda+ lambda-."""
    return (p_plus / (1.0 - p_plus)) * (p_minus / (1.0 - p_minus))


def periodic_alpha(k: int, rho_a: float, side: str, tol: float = 1e-14) -> float:
    """Smallest positive solution of the G/M/1 fixed point.

    Plus side: alpha (1 - rho alpha)^k = (1 - rho)^k;
    minus side: alpha (1 - (1-rho) alpha)^k = rho^k.
    alpha = 1 always solves; an interior root in (0, 1) exists exactly
    inside the rarefaction regime. Located by a sign scan on a 1e-3 grid
    followed by bisection; absence of an interior root raises.
    """
    if k < 1:
        raise ConfigError("k must be >= 1")
    if not 0.0 < rho_a < 1.0:
        raise ConfigError("rho must lie in (0, 1)")
    if side == "+":
        q, rhs = rho_a, (1.0 - rho_a) ** k
    elif side == "-":
        q, rhs = 1.0 - rho_a, rho_a**k
    else:
        raise ConfigError("side must be '+' or '-'")

    def f(x: float) -> float:
        return x * (1.0 - q * x) ** k - rhs

    eps = 1e-12
    grid = np.linspace(eps, 1.0 - eps, 1001)
    vals = np.array([f(x) for x in grid])
    sign_change = np.nonzero((vals[:-1] < 0) & (vals[1:] >= 0))[0]
    if sign_change.size == 0:
        raise ConfigError("no interior fixed point: slope outside the regime")
    lo, hi = float(grid[sign_change[0]]), float(grid[sign_change[0] + 1])
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    if abs(f(root)) > 1e-10:
        raise ConfigError("bisection failed to polish the fixed point")
    return root


def periodic_queue_params(k: int, a: float, side: str) -> QueueParams:
    """Queue parameters of one side of the periodic-substrate walk.

    delta is the rate of the positive jump (rho on the plus side, 1-rho
    on the minus side); gamma = delta (1 - alpha); b = P(X > 0) is the
    exponential-vs-gamma race probability.
    """
    r = rho(a)
    alpha = periodic_alpha(k, r, side)
    if side == "+":
        delta, b = r, (1.0 - r) ** k
    else:
        delta, b = 1.0 - r, r**k
    return QueueParams(delta=delta, gamma=delta * (1.0 - alpha), b=b)


def periodic_root_prob(a: float, k_plus: int, k_minus: int) -> float:
    """(1 - alpha+)(1 - alpha-) for the periodic substrate."""
    if not (1.0 / k_plus**2) < a < float(k_minus**2):
        raise ConfigError("slope outside the rarefaction interval")
    r = rho(a)
    return (1.0 - periodic_alpha(k_plus, r, "+")) * (
        1.0 - periodic_alpha(k_minus, r, "-")
    )


def finite_rooted_finite_prob(m: int) -> float:
    """P(the origin tree of the finite rooted substrate is finite) = 2/(m+2)."""
    if m < 1:
        raise ConfigError("m must be >= 1")
    return 2.0 / (m + 2.0)


def finite_rooted_direction_prob(a: float, m: int) -> float:
    """P(root of direction (1, a) is the origin) for the finite rooted
    substrate: a race of Exp(rho) against Gamma(m, 1-rho) on the right
    and of Exp(1-rho) against Exp(rho) on the left,

        P = (1 - q^m) * q,   q = 1/(1 + sqrt(a)),

    accumulated as rho * sum_{j=0}^{m-1} q^{j+1} term by term.
    """
    if m < 1:
        raise ConfigError("m must be >= 1")
    r = rho(a)
    q = 1.0 - r
    total = 0.0
    term = q
    for _ in range(m):
        total += term
        term *= q
    return r * total


def weighted_root_prob(a: float, mu_minus: float, mu_plus: float) -> float:
    """(1 - mu+/(1+sqrt(a))) (1 - (1+sqrt(a))/mu-) for the exponential
    weighted substrate, valid on a in ((mu+ - 1)^2, (mu- - 1)^2)."""
    if not 1.0 < mu_plus < mu_minus:
        raise ConfigError("need mu- > mu+ > 1")
    if not (mu_plus - 1.0) ** 2 < a < (mu_minus - 1.0) ** 2:
        raise ConfigError("slope outside the rarefaction interval")
    t = 1.0 + math.sqrt(a)
    return (1.0 - mu_plus / t) * (1.0 - t / mu_minus)


def weighted_optimal_slope(mu_minus: float, mu_plus: float) -> float:
    """The slope maximising the weighted root probability:
    1 + sqrt(a) = sqrt(mu+ mu-), i.e. a = (sqrt(mu+ mu-) - 1)^2, where
    the maximum equals (1 - sqrt(mu+/mu-))^2."""
    return (math.sqrt(mu_plus * mu_minus) - 1.0) ** 2


# ---------------------------------------------------------------------------
# Step laws of the corner subwalks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExpDiffLaw:
    """X = Exp(rate_pos) - Exp(rate_neg); negative drift iff
    rate_pos > rate_neg, and then gamma = rate_pos - rate_neg."""

    rate_pos: float
    rate_neg: float

    def queue_params(self) -> QueueParams:
        gamma = self.rate_pos - self.rate_neg
        if gamma <= 0:
            raise ConfigError("non-negative drift: no Lundberg exponent")
        return QueueParams(
            delta=self.rate_pos,
            gamma=gamma,
            b=self.rate_neg / (self.rate_pos + self.rate_neg),
        )

    def mean(self) -> float:
        return 1.0 / self.rate_pos - 1.0 / self.rate_neg

    def mgf(self, v: float) -> float:
        if v >= self.rate_pos:
            return math.inf
        return (self.rate_pos / (self.rate_pos - v)) * (
            self.rate_neg / (self.rate_neg + v)
        )

    def mgf_argmin(self) -> float:
        return 0.5 * (self.rate_pos - self.rate_neg)

    def sample(self, rng: np.random.Generator, shape) -> np.ndarray:
        return exp1(rng, shape) / self.rate_pos - exp1(rng, shape) / self.rate_neg


def bernoulli_step_law(p: float, a: float, side: str) -> ExpDiffLaw:
    """Corner step of the Bernoulli walk; p is the side's own parameter."""
    r = rho(a)
    if side == "+":
        return ExpDiffLaw(rate_pos=(1.0 - p) * r, rate_neg=p * (1.0 - r))
    if side == "-":
        return ExpDiffLaw(rate_pos=p * (1.0 - r), rate_neg=(1.0 - p) * r)
    raise ConfigError("side must be '+' or '-'")


def periodic_step_law(k: int, a: float, side: str) -> "PeriodicStepLaw":
    r = rho(a)
    if side == "+":
        return PeriodicStepLaw(rate_pos=r, shape_neg=k, rate_neg=1.0 - r, side="+")
    if side == "-":
        return PeriodicStepLaw(rate_pos=1.0 - r, shape_neg=k, rate_neg=r, side="-")
    raise ConfigError("side must be '+' or '-'")


@dataclass(frozen=True)
class PeriodicStepLaw:
    """X = Exp(rate_pos) - Gamma(shape_neg, rate_neg) with G/M/1 params."""

    rate_pos: float
    shape_neg: int
    rate_neg: float
    side: str

    def queue_params(self) -> QueueParams:
        r = self.rate_pos if self.side == "+" else self.rate_neg
        alpha = periodic_alpha(self.shape_neg, r, self.side)
        b = (1.0 - r) ** self.shape_neg if self.side == "+" else r**self.shape_neg
        return QueueParams(
            delta=self.rate_pos, gamma=self.rate_pos * (1.0 - alpha), b=b
        )

    def mean(self) -> float:
        return 1.0 / self.rate_pos - self.shape_neg / self.rate_neg

    def mgf(self, v: float) -> float:
        if v >= self.rate_pos:
            return math.inf
        return (self.rate_pos / (self.rate_pos - v)) * (
            self.rate_neg / (self.rate_neg + v)
        ) ** self.shape_neg

    def mgf_argmin(self) -> float:
        return (self.shape_neg * self.rate_pos - self.rate_neg) / (self.shape_neg + 1)

    def sample(self, rng: np.random.Generator, shape) -> np.ndarray:
        return exp1(rng, shape) / self.rate_pos - rng.standard_gamma(
            float(self.shape_neg), shape
        ) / self.rate_neg


def weighted_step_law(p: float, a: float, side: str) -> ExpDiffLaw:
    """Corner step of the weighted-substrate dual walk."""
    r = rho(a)
    if side == "+":
        return ExpDiffLaw(rate_pos=1.0 - p, rate_neg=1.0 - r)
    if side == "-":
        return ExpDiffLaw(rate_pos=1.0 - r, rate_neg=1.0 - p)
    raise ConfigError("side must be '+' or '-'")


# ---------------------------------------------------------------------------
# Joint transform of (|Z|, M)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SeriesConfig:
    """Controls for the Spitzer-series evaluation."""

    n_max: int = 64
    samples_per_term: int = 200_000
    tolerance: float = 1e-3
    chunk: int = 65_536

    def __post_init__(self):
        if self.n_max < 1 or self.samples_per_term < 1 or self.tolerance <= 0:
            raise ConfigError("invalid series configuration")


@dataclass(frozen=True)
class TransformResult:
    s: float
    u: float
    value: float
    truncation_bound: float


def _spitzer_terms(law, n_max, samples, rng, u_args, chunk) -> np.ndarray:
    """terms[i, n-1] = E[e^{u_i S_n}; S_n > 0], one shared path pool."""
    sums = np.zeros((len(u_args), n_max))
    done = 0
    while done < samples:
        c = min(chunk, samples - done)
        s = np.cumsum(law.sample(rng, (c, n_max)), axis=1)
        pos = s > 0.0
        for i, ua in enumerate(u_args):
            if ua == 0.0:
                sums[i] += pos.sum(axis=0)
            else:
                sums[i] += np.where(pos, np.exp(ua * s), 0.0).sum(axis=0)
        done += c
    return sums / samples


def _phi_from_terms(g: float, s: float, terms_row: np.ndarray) -> tuple[float, float]:
    """(phi, A) where A = exp(series) and phi = g (A - 1)."""
    n = np.arange(1, terms_row.size + 1)
    series = float(np.sum(s**n / n * terms_row))
    return g * math.expm1(series), math.exp(series)


def _series_tail(law, qp: QueueParams, s: float, u: float, n_max: int) -> float:
    """Bound on the dropped series tail sum_{n > n_max} (s^n/n) t_n(u).

    Each term satisfies t_n(u) = E[e^{u S_n}; S_n > 0] <= m(v)^n for any
    v in [max(u, 0), gamma] (Chernoff), so the geometric s^n/n tail gains
    a factor min m(v)^n.
    """
    lo, hi = max(u, 0.0), qp.gamma
    v = min(max(law.mgf_argmin(), lo), hi)
    m_star = min(law.mgf(v), law.mgf(lo), law.mgf(hi))
    q = s * min(m_star, 1.0)
    n = n_max + 1
    return q**n / (n * (1.0 - q))


def joint_transform_points(
    points: Sequence[tuple[float, float]],
    law_plus,
    law_minus,
    cfg: SeriesConfig,
    seed,
    u_cap: float | None = None,
) -> list[TransformResult]:
    """E(s^{|Z|} e^{u M}) of the two-sided walk at the given (s, u) points.

    One Monte Carlo path pool per side serves every point and every u
    argument. The reported truncation bound dominates the absolute error
    of the value caused by cutting the s^n/n series at n_max (each
    dropped term is bounded through the step law's MGF); a bound above
    the configured tolerance raises instead of silently degrading.
    """
    qp = law_plus.queue_params()
    qm = law_minus.queue_params()
    cap = u_cap if u_cap is not None else min(qp.gamma, qm.gamma) * (1.0 - 1e-6)
    for s, u in points:
        if not 0.0 < s < 1.0:
            raise ConfigError("s must lie in (0, 1)")
        if not 0.0 <= u <= cap:
            raise ConfigError(f"u={u} outside the transform domain [0, {cap:.6g}]")
    u_plus = sorted({u for _, u in points} | {u - qm.gamma for _, u in points})
    u_minus = sorted({u for _, u in points} | {u - qp.gamma for _, u in points})
    rng_p = make_rng(seed, 0)
    rng_m = make_rng(seed, 1)
    tp = _spitzer_terms(law_plus, cfg.n_max, cfg.samples_per_term, rng_p, u_plus, cfg.chunk)
    tm = _spitzer_terms(law_minus, cfg.n_max, cfg.samples_per_term, rng_m, u_minus, cfg.chunk)
    out = []
    gp, gm = qp.atom, qm.atom
    for s, u in points:
        pieces = []  # (coeff, g, law, qparams, terms_row, u_arg)
        pieces.append((1.0, gp, law_plus, qp, tp[u_plus.index(u)], u))
        pieces.append((1.0 - gm, gp, law_plus, qp, tp[u_plus.index(u - qm.gamma)], u - qm.gamma))
        pieces.append((1.0, gm, law_minus, qm, tm[u_minus.index(u)], u))
        pieces.append((1.0 - gp, gm, law_minus, qm, tm[u_minus.index(u - qp.gamma)], u - qp.gamma))
        value = gp * gm
        bound = 0.0
        for sign, (coeff, g, law, q, row, ua) in zip((1, -1, 1, -1), pieces):
            phi, a_val = _phi_from_terms(g, s, row)
            value += sign * coeff * phi
            tail = _series_tail(law, q, s, ua, cfg.n_max)
            bound += coeff * g * a_val * math.expm1(tail)
        if bound > cfg.tolerance:
            raise CertificationError(
                f"truncation bound {bound:.3g} at (s={s}, u={u}) exceeds "
                f"tolerance {cfg.tolerance:g}; increase n_max"
            )
        out.append(TransformResult(s=s, u=u, value=value, truncation_bound=bound))
    return out


def joint_transform(
    s: float, u: float, law_plus, law_minus, cfg: SeriesConfig, seed, u_cap=None
) -> TransformResult:
    return joint_transform_points([(s, u)], law_plus, law_minus, cfg, seed, u_cap)[0]
