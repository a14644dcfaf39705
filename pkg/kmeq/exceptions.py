class KmeqError(Exception):
    pass


class DimensionError(KmeqError, ValueError):
    pass


class NonFiniteError(KmeqError, ValueError):
    pass


class BlockIndexError(KmeqError, IndexError):
    pass


class ParameterError(KmeqError, ValueError):
    pass


class DomainError(KmeqError, ValueError):
    pass


class NumericalFailure(KmeqError, ArithmeticError):
    """Raised when a LAPACK kernel does not converge."""

    pass


class PavingInconsistency(KmeqError, ArithmeticError):
    """Raised when a convergence factor falls outside [0, 1); the paving bounds
    and the matrix they were measured on disagree."""

    pass


class ParameterizationError(ParameterError):
    pass


class UnderdeterminedError(ParameterError):
    pass


class SplineEvaluationError(DomainError):
    pass


class SvdSizeGuardError(ParameterError):
    pass


class ConfigError(ParameterError):
    pass


class RegimeWarning(UserWarning):
    """Problem dimensions outside the thin-A / fat-B regime."""

    pass
