"""Geodesic forests in exponential last-passage percolation.

Simulation and analytics toolkit: exact lattice last-passage dynamic
programming, substrate construction, geodesic forests with their roots,
heights and coalescence times, the dual two-sided random walk whose
global argmax has the law of the root location, every closed-form
probability of the computable substrate families, and a replicated
Monte Carlo harness with a FastAPI service and a thin CLI client.
"""

__version__ = "0.1.0"

from .errors import (
    CertificationError,
    ConfigError,
    ExperimentError,
    GeoforestError,
    WindowError,
)

__all__ = [
    "__version__",
    "GeoforestError",
    "ConfigError",
    "WindowError",
    "CertificationError",
    "ExperimentError",
]
