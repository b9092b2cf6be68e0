"""Exception hierarchy shared across the package."""


class PubFdrError(Exception):
    """Base class for all package errors."""


class DomainError(PubFdrError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class QuadratureError(PubFdrError):
    """Numerical integration failed to reach the requested tolerance."""

    def __init__(self, message: str, achieved: float | None = None):
        super().__init__(message)
        self.achieved = achieved


class TailUnderflowError(PubFdrError):
    """A tail probability or density is too small to condition on."""


class DegenerateModelError(PubFdrError):
    """The model assigns zero probability to the whole observable region."""


class LikelihoodSupportError(PubFdrError):
    """An observation lies in a zero-publication-probability region."""


class NonConvergenceError(PubFdrError):
    """Optimization failed to converge from every start point."""

    def __init__(self, message: str, diagnostics: list[str] | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


class NoSolutionError(PubFdrError):
    """A moment equation has no root inside the search bracket."""


class UndefinedRatioError(PubFdrError):
    """A count-based ratio has an empty denominator."""


class DataFormatError(PubFdrError):
    """An input file does not match the expected schema."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
