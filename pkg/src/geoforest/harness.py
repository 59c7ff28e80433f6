"""Replicated Monte Carlo: scheduling, estimators and tail fitting.

Replicas are deterministic functions of (master seed, stream domain,
replica id): each gets its own PCG64 generator spawned through
SeedSequence, so collections are bit-identical for any parallelism
degree and any execution order. Aggregation is always in replica order.

Estimators: Wald intervals for probabilities once n >= 1000, Wilson
below that; confidence intervals are clamped to [0, 1] with a flag.
Distribution distances are plain total variation over integer atoms and
the exact two-sample Kolmogorov-Smirnov statistic. Power-law tails are
fit by least squares on log-log survival curves.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError
from .lattice import make_rng

Kernel = Callable[[int, np.random.Generator], object]


def _run_one(args):
    kernel, master_seed, domain, replica = args
    return kernel(replica, make_rng(master_seed, domain, replica))


def run_replicated(
    kernel: Kernel,
    n_replicas: int,
    master_seed: int,
    threads: int = 1,
    domain: int = 0,
) -> list:
    """Map a kernel over replica ids with per-replica generators.

    The kernel must be a picklable callable of (replica_id, rng); results
    come back ordered by replica id regardless of worker count.
    """
    if n_replicas < 1:
        raise ConfigError("replica count must be >= 1")
    jobs = [(kernel, master_seed, domain, i) for i in range(n_replicas)]
    if threads <= 1:
        return [_run_one(j) for j in jobs]
    chunk = max(1, n_replicas // (8 * threads))
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(_run_one, jobs, chunksize=chunk))


@dataclass(frozen=True)
class Estimate:
    """Point estimate with a 95% confidence interval."""

    value: float
    stderr: float
    ci_lo: float
    ci_hi: float
    n: int
    clamped: bool = False

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "stderr": self.stderr,
            "ci_lo": self.ci_lo,
            "ci_hi": self.ci_hi,
            "n": self.n,
            "clamped": self.clamped,
        }


_Z95 = 1.959963984540054


def estimate_prob(successes, n: int | None = None) -> Estimate:
    """Sample proportion with Wald (n >= 1000) or Wilson (small n) CI."""
    if n is None:
        arr = np.asarray(successes, dtype=bool)
        k, n = int(arr.sum()), int(arr.size)
    else:
        k, n = int(successes), int(n)
    if n < 1 or not 0 <= k <= n:
        raise ConfigError("invalid success count")
    p = k / n
    stderr = math.sqrt(p * (1.0 - p) / n)
    if n >= 1000:
        lo, hi = p - _Z95 * stderr, p + _Z95 * stderr
    else:
        z2 = _Z95**2
        center = (p + z2 / (2 * n)) / (1 + z2 / n)
        half = _Z95 * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n)
        lo, hi = center - half, center + half
    clamped = lo < 0.0 or hi > 1.0
    return Estimate(
        value=p,
        stderr=stderr,
        ci_lo=max(0.0, lo),
        ci_hi=min(1.0, hi),
        n=n,
        clamped=clamped,
    )


def estimate_mean(xs) -> Estimate:
    x = np.asarray(xs, dtype=float)
    if x.size < 2:
        raise ConfigError("need at least two samples")
    m = float(x.mean())
    se = float(x.std(ddof=1) / math.sqrt(x.size))
    return Estimate(value=m, stderr=se, ci_lo=m - _Z95 * se, ci_hi=m + _Z95 * se, n=x.size)


def counts_histogram(values: Iterable[int], lo: int, hi: int) -> dict[int, int]:
    """Integer histogram over [lo, hi] with everything else pooled into a
    single overflow atom keyed by hi + 1."""
    out = {z: 0 for z in range(lo, hi + 1)}
    overflow = 0
    for v in values:
        v = int(v)
        if lo <= v <= hi:
            out[v] += 1
        else:
            overflow += 1
    out[hi + 1] = overflow
    return out


def tv_distance(p: Mapping[int, float], q: Mapping[int, float]) -> float:
    """Total variation distance between two discrete laws given as
    (possibly unnormalised) nonnegative weights over integer atoms."""
    ptot = float(sum(p.values()))
    qtot = float(sum(q.values()))
    if ptot <= 0 or qtot <= 0:
        raise ConfigError("empty histogram")
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0) / ptot - q.get(k, 0) / qtot) for k in keys)


def ks_statistic(x, y) -> float:
    """Exact two-sample KS statistic, ties handled by right-continuity."""
    xs = np.sort(np.asarray(x, dtype=float))
    ys = np.sort(np.asarray(y, dtype=float))
    if xs.size == 0 or ys.size == 0:
        raise ConfigError("empty sample")
    grid = np.union1d(xs, ys)
    fx = np.searchsorted(xs, grid, side="right") / xs.size
    fy = np.searchsorted(ys, grid, side="right") / ys.size
    return float(np.abs(fx - fy).max())


def ks_critical(n: int, m: int, alpha: float = 0.01) -> float:
    """Asymptotic two-sample KS critical value c(alpha) sqrt((n+m)/(nm))."""
    if not 0 < alpha < 1:
        raise ConfigError("alpha must lie in (0, 1)")
    c = math.sqrt(-0.5 * math.log(alpha / 2.0))
    return c * math.sqrt((n + m) / (n * m))


@dataclass(frozen=True)
class TailFit:
    """Least-squares power-law fit of a survival curve on log-log scale."""

    exponent: float
    constant: float
    fit_lo: int
    fit_hi: int
    r2: float
    plateau_min: float  # min of n^{2/3} p_n over the fit range
    plateau_median: float

    def as_dict(self) -> dict:
        return {
            "exponent": self.exponent,
            "constant": self.constant,
            "fit_lo": self.fit_lo,
            "fit_hi": self.fit_hi,
            "r2": self.r2,
            "plateau_min": self.plateau_min,
            "plateau_median": self.plateau_median,
        }


def tail_fit(ns, ps, fit_lo: int, fit_hi: int) -> TailFit:
    """Fit p_n ~ constant * n^exponent over fit_lo <= n <= fit_hi.

    Only strictly positive survival values enter the fit; fewer than
    four usable points raise. The n^{2/3} p_n plateau curve over the fit
    range is summarised by its min and median.
    """
    n = np.asarray(ns, dtype=float)
    p = np.asarray(ps, dtype=float)
    if np.any(np.diff(p) > 1e-12):
        raise ConfigError("survival curve must be nonincreasing")
    sel = (n >= fit_lo) & (n <= fit_hi) & (p > 0)
    if int(sel.sum()) < 4:
        raise ConfigError("fewer than 4 usable points in the fit range")
    ln, lp = np.log(n[sel]), np.log(p[sel])
    slope, intercept = np.polyfit(ln, lp, 1)
    pred = slope * ln + intercept
    ss_res = float(np.sum((lp - pred) ** 2))
    ss_tot = float(np.sum((lp - lp.mean()) ** 2))
    plateau = n[sel] ** (2.0 / 3.0) * p[sel]
    return TailFit(
        exponent=float(slope),
        constant=float(math.exp(intercept)),
        fit_lo=int(fit_lo),
        fit_hi=int(fit_hi),
        r2=1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0,
        plateau_min=float(plateau.min()),
        plateau_median=float(np.median(plateau)),
    )
