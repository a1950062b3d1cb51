"""Exception types and warning categories shared across the package."""


class ConfigurationError(Exception):
    """Invalid grid or run configuration (bad N, cutoff violation, malformed file)."""


class EvaluationError(Exception):
    """A symbol evaluator returned a non-finite value."""


class NumericError(Exception):
    """A numerical routine failed to meet its contract (solver, quadrature)."""


class DegeneracyError(NumericError):
    """A Gram matrix lost positive definiteness; well localization broke down."""


class PrecisionWarning(UserWarning):
    """A computed gap or norm is near the double-precision residual floor."""
