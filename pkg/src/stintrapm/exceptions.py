"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class RapmError(Exception):
    exit_code = 1


class ParameterError(RapmError, ValueError):
    """Invalid argument value (non-positive lambda, zero games, ...)."""

    exit_code = 1


class ConfigError(RapmError):
    """Missing or conflicting configuration, e.g. no official score for QC."""

    exit_code = 1


class ParseError(RapmError, ValueError):
    exit_code = 2

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class IntegrityError(RapmError):
    """Data violates a structural invariant (duplicate player, negative total)."""

    exit_code = 2


class EstimationError(RapmError, ArithmeticError):
    """Numerical failure: non-positive degrees of freedom, singular system."""

    exit_code = 3
