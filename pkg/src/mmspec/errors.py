"""Exception hierarchy shared by all modules."""


class MmspecError(Exception):
    """Base class for errors raised by this package."""


class InvalidParameterError(MmspecError, ValueError):
    """An argument violates a documented precondition."""


class NotNonnegativeDefiniteError(InvalidParameterError):
    """The block matrix has an eigenvalue below the tolerance."""

    def __init__(self, eigenvalue, tol=1e-10):
        self.eigenvalue = float(eigenvalue)
        super().__init__(
            f"B is not non-negative definite: eigenvalue {self.eigenvalue:.6g} < -{tol:g}"
        )


class DegenerateInputError(MmspecError, ValueError):
    """Geometric input is rank deficient (flat cloud, collapsed simplex)."""


class ConvergenceError(MmspecError, ArithmeticError):
    """An iterative numerical routine did not converge.

    Attributes
    ----------
    residual : float or None
        Worst residual at termination, when meaningful.
    iterations : int or None
        Number of iterations (length of the iterate trace).
    """

    def __init__(self, message, residual=None, iterations=None):
        self.residual = residual
        self.iterations = iterations
        super().__init__(message)


class ParseError(MmspecError, ValueError):
    """Malformed input file; ``line`` is 1-indexed."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        parts = []
        if path is not None:
            parts.append(str(path))
        if line is not None:
            parts.append(f"line {line}")
        super().__init__(f"{', '.join(parts)}: {message}" if parts else message)


class ConfigError(MmspecError, ValueError):
    """Invalid experiment configuration; ``field`` names the offending key."""

    def __init__(self, message, field=None):
        self.field = field
        super().__init__(f"config field {field!r}: {message}" if field else message)
