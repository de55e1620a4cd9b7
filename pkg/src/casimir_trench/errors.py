"""Exception hierarchy shared by all modules."""


class CasimirTrenchError(Exception):
    """Base class for every error raised by this package."""


class DomainError(CasimirTrenchError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class ValidationError(CasimirTrenchError, ValueError):
    """A data object violates one of its invariants."""


class ParseError(ValidationError):
    """Malformed input file. ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ExtrapolationError(DomainError):
    """Requested point lies outside the tabulated range."""


class NumericalError(CasimirTrenchError, RuntimeError):
    """Quadrature, solver or fit failed to reach its tolerance."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class MeshError(NumericalError):
    pass


class AssemblyError(NumericalError):
    pass


class FitError(NumericalError):
    pass


class SimulationError(NumericalError):
    pass


class ConfigError(CasimirTrenchError, ValueError):
    """Invalid run configuration; ``key`` names the offending entry."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
