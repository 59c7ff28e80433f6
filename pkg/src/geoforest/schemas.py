"""Pydantic request/response models shared by the service, CLI and
experiment layer. Validation errors here are configuration errors (CLI
exit code 2 / HTTP 422)."""

from __future__ import annotations

from typing import Annotated, Literal, Union

from pydantic import BaseModel, Field, model_validator


class BernoulliSpec(BaseModel):
    kind: Literal["bernoulli"] = "bernoulli"
    p_minus: float = Field(2.0 / 3.0, description="up-step probability, left side")
    p_plus: float = Field(1.0 / 3.0, description="down-step probability, right side")

    @model_validator(mode="after")
    def _check(self):
        if not (0.0 <= self.p_plus < self.p_minus <= 1.0):
            raise ValueError("need 0 <= p_plus < p_minus <= 1")
        return self


class PeriodicSpec(BaseModel):
    kind: Literal["periodic"] = "periodic"
    k_plus: int = Field(1, ge=1, description="right steps per period, right side")
    k_minus: int = Field(2, ge=1, description="up steps per period, left side")

    @model_validator(mode="after")
    def _check(self):
        if max(self.k_plus, self.k_minus) < 2:
            raise ValueError("need max(k_plus, k_minus) >= 2")
        return self


class FiniteRootedSpec(BaseModel):
    kind: Literal["finite_rooted"] = "finite_rooted"
    m: int = Field(1, ge=1, description="length of the flat stretch, 3 corners total")


class FlatSpec(BaseModel):
    kind: Literal["flat"] = "flat"


SubstrateSpec = Annotated[
    Union[BernoulliSpec, PeriodicSpec, FiniteRootedSpec, FlatSpec],
    Field(discriminator="kind"),
]


class RootDistConfig(BaseModel):
    """Two-arm root-location experiment: lattice roots vs walk argmax."""

    substrate: Union[BernoulliSpec, PeriodicSpec] = Field(
        default_factory=BernoulliSpec, discriminator="kind"
    )
    a: float = Field(1.0, gt=0, description="direction slope")
    replicas: int = Field(10_000, ge=1, description="samples per arm")
    seed: int = 0
    threads: int = Field(1, ge=1)
    checkpoint_start: int = Field(32, ge=4, description="first stabilization level")
    max_level: int = Field(512, ge=8, description="lattice-arm level budget")
    agree: int = Field(3, ge=2, description="consecutive checkpoints that must agree")
    tv_band: int = Field(20, ge=1, description="corner-ordinal band for the TV distance")
    max_exclusion_rate: float = Field(0.01, gt=0, le=1)
    walk_batch: int = Field(2_000, ge=1)
    safety: float = Field(40.0, gt=0, description="certification margin, units of 1/gamma")


class HeightTailConfig(BaseModel):
    """Survival curve of the tree height at the origin and its tail fit."""

    model: Literal["flat", "weighted"] = "flat"
    samples: int = Field(20_000, ge=1)
    n_max: int = Field(512, ge=16, description="censoring level")
    seed: int = 0
    threads: int = Field(1, ge=1)
    fit_lo: int | None = Field(None, description="fit range start; default n_max/16")
    fit_hi: int | None = Field(None, description="fit range end; default n_max/2")
    batch: int = Field(512, ge=1, description="samples per scheduled replica batch")

    def resolved_fit_range(self) -> tuple[int, int]:
        lo = self.fit_lo if self.fit_lo is not None else max(4, self.n_max // 16)
        hi = self.fit_hi if self.fit_hi is not None else self.n_max // 2
        if not 1 <= lo < hi <= self.n_max:
            raise ValueError("invalid fit range")
        return lo, hi


class DualConfig(BaseModel):
    """Coalescence time T(m) vs weighted-substrate height H(m)."""

    m: int = Field(4, ge=1)
    replicas: int = Field(5_000, ge=1, description="replicas per arm")
    n: int = Field(400, ge=8, description="geodesic target level; doubled for the check")
    seed: int = 0
    threads: int = Field(1, ge=1)
    alpha: float = Field(0.01, gt=0, lt=1, description="KS significance level")
    max_nc_rate: float = Field(0.01, gt=0, le=1, description="abort threshold")
    batch: int = Field(16, ge=1)

    @model_validator(mode="after")
    def _check(self):
        if self.m > self.n:
            raise ValueError("need m <= n")
        return self


class WalkDistConfig(BaseModel):
    """One-sided walk maxima against the queueing closed forms."""

    p: float = Field(1.0 / 3.0, gt=0, lt=1, description="side's own step parameter")
    side: Literal["+", "-"] = "+"
    a: float = Field(1.0, gt=0)
    replicas: int = Field(100_000, ge=100)
    xs: list[float] = Field(default_factory=lambda: [0.5, 1.0, 2.0])
    seed: int = 0
    threads: int = Field(1, ge=1)
    batch: int = Field(5_000, ge=1)
    safety: float = Field(40.0, gt=0)


class RootEscapeConfig(BaseModel):
    """Stabilized argmax location over a grid of slopes approaching the
    critical endpoints (coupled across slopes within each replica)."""

    p_minus: float = Field(2.0 / 3.0, gt=0, le=1)
    p_plus: float = Field(1.0 / 3.0, ge=0, lt=1)
    a_grid: list[float] = Field(default_factory=lambda: [1.0, 1.5, 2.5, 3.5, 3.9])
    replicas: int = Field(4_000, ge=10)
    safety: float = Field(40.0, gt=0)
    seed: int = 0
    threads: int = Field(1, ge=1)
    batch: int = Field(250, ge=1)

    @model_validator(mode="after")
    def _check(self):
        if sorted(self.a_grid) != self.a_grid:
            raise ValueError("a_grid must be ascending")
        return self


class TransformConfig(BaseModel):
    """Joint transform E(s^|Z| e^{uM}) on a grid of (s, u) points."""

    family: Literal["bernoulli", "periodic", "weighted"] = "bernoulli"
    p_minus: float = 2.0 / 3.0
    p_plus: float = 1.0 / 3.0
    k_plus: int = 1
    k_minus: int = 2
    a: float = Field(1.0, gt=0)
    s_values: list[float] = Field(default_factory=lambda: [0.3, 0.5])
    u_values: list[float] = Field(default_factory=lambda: [0.0])
    n_max: int = Field(150, ge=1)
    samples_per_term: int = Field(200_000, ge=100)
    tolerance: float = Field(1e-3, gt=0)
    seed: int = 0


class ClosedFormQuery(BaseModel):
    """One closed-form evaluation; family selects the formula."""

    family: Literal[
        "bernoulli", "periodic", "finite-rooted-direction", "finite-rooted-total", "weighted"
    ] = "bernoulli"
    a: float = Field(1.0, gt=0)
    p_minus: float = 2.0 / 3.0
    p_plus: float = 1.0 / 3.0
    k_plus: int = 1
    k_minus: int = 2
    m: int = 1
    mu_minus: float = 2.0
    mu_plus: float = 4.0 / 3.0


class ForestConfig(BaseModel):
    """Materialise a root map and export it as CSV."""

    substrate: SubstrateSpec = Field(default_factory=FlatSpec)
    level_max: int = Field(24, ge=3)
    col_lo: int = 1
    col_hi: int = 12
    window: int = Field(256, ge=4, description="substrate window, edges per side")
    seed: int = 0

    @model_validator(mode="after")
    def _check(self):
        if self.col_lo > self.col_hi:
            raise ValueError("need col_lo <= col_hi")
        return self


class Report(BaseModel):
    """Deterministic experiment report: metrics plus named CSV payloads."""

    experiment: str
    seed: int
    config: dict
    metrics: dict
    csv: dict[str, str] = Field(default_factory=dict)
    notes: list[str] = Field(default_factory=list)


class ClosedFormResult(BaseModel):
    family: str
    value: float
    detail: dict = Field(default_factory=dict)
