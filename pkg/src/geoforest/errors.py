"""Exception taxonomy shared across the package.

ConfigError covers bad parameters and malformed inputs (CLI exit 2);
ExperimentError covers runs that started but could not be certified,
e.g. exclusion rates above the abort threshold (CLI exit 3).
"""


class GeoforestError(Exception):
    """Base class for package errors."""


class ConfigError(GeoforestError):
    """Invalid parameters, windows or file formats."""


class WindowError(GeoforestError):
    """A simulated window was exhausted; results would be silently biased."""


class CertificationError(GeoforestError):
    """A truncated maximum could not be certified within the window."""


class ExperimentError(GeoforestError):
    """Experiment-level failure, e.g. exclusion rate above threshold."""
