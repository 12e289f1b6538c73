"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the physical or mathematical domain of an operation."""


class ZeroHeadError(DomainError):
    """No positive head across the gate; callers treat the gate as closed."""


class NoSolutionError(ArithmeticError):
    """A transition equation has no admissible root; signals a regime transition."""


class ConvergenceError(RuntimeError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class InfeasibleOpeningError(DomainError):
    """The required gate opening exceeds the available gate travel."""

    def __init__(self, message, required=None, a_max=None):
        super().__init__(message)
        self.required = required
        self.a_max = a_max


class ParseError(ValueError):
    """Malformed input file. ``line`` is the 1-based line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
