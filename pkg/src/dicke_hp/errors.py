"""Exception hierarchy shared by all modules."""


class DickeError(Exception):
    """Base class for package errors."""


class ValidationError(DickeError, ValueError):
    """Invalid parameters, indices or configuration."""


class DimensionError(ValidationError):
    """Operands live on different spaces."""


class NotHermitianError(ValidationError):
    """An operator flagged or required as Hermitian is not."""


class CutoffError(DickeError):
    """The Fock truncation is too small for the requested object."""


class ResonanceError(DickeError, ArithmeticError):
    """A perturbative denominator is (nearly) zero."""


class SolverError(DickeError, ArithmeticError):
    """Eigensolver did not converge or returned inaccurate pairs."""
