"""Exception hierarchy shared by all chronodec modules."""


class ChronodecError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(ChronodecError, ValueError):
    """An object failed its construction invariants."""


class DimensionError(ChronodecError, ValueError):
    """Operands have incompatible shapes."""


class DomainError(ChronodecError, ValueError):
    """A function was evaluated outside its domain."""


class NumericalError(ChronodecError, ArithmeticError):
    """A numerical kernel failed (eigen-solver, integrator, quadrature)."""


class EigenSolverError(NumericalError):
    def __init__(self, message, residual):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class IntegrationError(NumericalError):
    def __init__(self, message, last_good_time=None):
        if last_good_time is not None:
            message = f"{message} (last good time {last_good_time!r})"
        super().__init__(message)
        self.last_good_time = last_good_time


class ConfigError(ChronodecError):
    """Invalid experiment configuration.

    ``code`` is one of ``E_SYNTAX``, ``E_UNKNOWN_KEY``, ``E_MISSING_KEY``,
    ``E_TYPE``, ``E_VALUE`` or ``E_OUTPUT``.
    """

    def __init__(self, code, message, *, key=None, line=None, column=None):
        loc = f" at {line}:{column}" if line is not None else ""
        super().__init__(f"[{code}]{loc} {message}")
        self.code = code
        self.key = key
        self.line = line
        self.column = column
