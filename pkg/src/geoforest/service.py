"""FastAPI service wrapping the experiment layer.

Every endpoint takes a validated config model and returns a Report with
deterministic metrics and CSV payloads; the CLI is a thin client of this
app (in-process by default, remote with --server). Config problems map
to 422 (pydantic) or 400, experiment-level failures such as exclusion
rates above threshold map to 409.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from . import __version__, experiments
from .errors import CertificationError, ConfigError, ExperimentError, WindowError
from .schemas import (
    ClosedFormQuery,
    ClosedFormResult,
    DualConfig,
    ForestConfig,
    HeightTailConfig,
    Report,
    RootDistConfig,
    RootEscapeConfig,
    TransformConfig,
    WalkDistConfig,
)


def _guard(fn, *args):
    try:
        return fn(*args)
    except (ConfigError, WindowError) as e:
        raise HTTPException(status_code=400, detail={"kind": "config", "message": str(e)})
    except (ExperimentError, CertificationError) as e:
        raise HTTPException(
            status_code=409, detail={"kind": "experiment", "message": str(e)}
        )


def create_app() -> FastAPI:
    app = FastAPI(title="geoforest", version=__version__)

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok", "version": __version__}

    @app.post("/v1/experiments/root-dist", response_model=Report)
    def root_dist(cfg: RootDistConfig) -> Report:
        return _guard(experiments.experiment_root_dist, cfg)

    @app.post("/v1/experiments/height-tail", response_model=Report)
    def height_tail(cfg: HeightTailConfig) -> Report:
        return _guard(experiments.experiment_height_tail, cfg)

    @app.post("/v1/experiments/dual", response_model=Report)
    def dual(cfg: DualConfig) -> Report:
        return _guard(experiments.experiment_dual, cfg)

    @app.post("/v1/experiments/walk-dist", response_model=Report)
    def walk_dist(cfg: WalkDistConfig) -> Report:
        return _guard(experiments.experiment_walk_dist, cfg)

    @app.post("/v1/experiments/root-escape", response_model=Report)
    def root_escape(cfg: RootEscapeConfig) -> Report:
        return _guard(experiments.experiment_root_escape, cfg)

    @app.post("/v1/experiments/forest", response_model=Report)
    def forest(cfg: ForestConfig) -> Report:
        return _guard(experiments.experiment_forest, cfg)

    @app.post("/v1/analytics/transform", response_model=Report)
    def transform(cfg: TransformConfig) -> Report:
        return _guard(experiments.experiment_transform, cfg)

    @app.post("/v1/analytics/closed-forms", response_model=ClosedFormResult)
    def closed_forms(query: ClosedFormQuery) -> ClosedFormResult:
        return _guard(experiments.closed_form, query)

    return app


app = create_app()
