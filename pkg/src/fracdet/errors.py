"""Exception hierarchy shared by all modules."""


class FracdetError(Exception):
    """Base class for every error raised by this package."""


class NonConvergence(FracdetError):
    """Root refinement or an eigensolver failed to reach its tolerance."""


class ComplexSpectrum(FracdetError):
    """A preimage that must be real (an eigenvalue) came out complex."""


class ZeroNotSimpleRoot(FracdetError):
    pass


class UnknownEigenvalue(FracdetError):
    pass


class MultiplicityMismatch(FracdetError):
    """Assembled spectrum does not have |V_n| eigenvalues."""


class BranchDivergence(FracdetError):
    pass


class DegenerateCase(FracdetError):
    """A generic-case formula was asked to divide by d - m = 0 (or similar)."""


class SingularBeyondKernel(FracdetError):
    """Laplacian kernel has dimension > 1, i.e. the graph is disconnected."""


class OutOfConvergenceRegion(FracdetError):
    pass


class GeometricPole(FracdetError):
    pass


class ParameterOutOfRange(FracdetError, ValueError):
    pass


class ParseError(FracdetError):
    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.field = field
        self.line = line


class ValidationError(FracdetError):
    """Raised when a system description fails ``decimation.validate``."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class OracleInfeasible(FracdetError):
    """Requested oracle graph exceeds the vertex budget."""
