"""Exception types shared across the package.

The CLI maps these onto exit codes: schema/parameter/data problems are
usage errors (2), shape mismatches are data-shape errors (3), divergence
and anything unexpected is an internal error (1).
"""


class ShapeError(ValueError):
    """Array dimensions do not line up."""


class ParameterError(ValueError):
    """An argument value is outside its legal range."""


class InsufficientSamplesError(ValueError):
    """An estimator received fewer rows than it needs."""


class SchemaError(ValueError):
    """An input file does not match the expected layout."""


class DataError(ValueError):
    """A dataset cannot be built from the given inputs."""


class DegenerateWeightsError(ValueError):
    """Every loss component is zero, so loss ratios are undefined."""


class DivergenceError(RuntimeError):
    """Training produced a non-finite value."""
