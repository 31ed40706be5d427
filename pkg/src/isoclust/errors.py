"""Exception types shared across the package.

The CLI maps these onto exit codes: usage problems exit 1 (handled by the
argument parser), :class:`DataError` exits 2, and :class:`MetricError` /
:class:`NumericalError` exit 3.
"""


class DataError(ValueError):
    """Malformed or incompatible input data (bad file, wrong labels, shape mismatch)."""


class MetricError(ArithmeticError):
    """A metric is mathematically undefined for the given input."""


class NumericalError(RuntimeError):
    """A numerical routine failed (e.g. an eigendecomposition did not converge)."""
