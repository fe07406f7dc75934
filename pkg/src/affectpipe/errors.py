"""Exception hierarchy shared by the whole pipeline.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
NumericalError -> 4.
"""


class AffectPipeError(Exception):
    """Base class for all pipeline errors."""


class ConfigError(AffectPipeError):
    """Invalid or incomplete run configuration."""


class DataError(AffectPipeError):
    """Malformed or inconsistent input data (manifests, audio, lexicons)."""


class NumericalError(AffectPipeError):
    """A numerical procedure failed (solver, EM collapse, LP instability)."""
