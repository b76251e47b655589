"""Exception hierarchy shared across the package."""


class CGWishError(Exception):
    """Base class for all library errors."""


class ValidationError(CGWishError, ValueError):
    """Input does not satisfy a precondition."""


class NumericalError(CGWishError, ArithmeticError):
    """A numerical routine broke down."""


class NotDecomposable(ValidationError):
    pass


class NotHomogeneous(ValidationError):
    pass


class EdgeNotPresent(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class DimensionCapExceeded(ValidationError):
    pass


class NotInPG(ValidationError):
    pass


class InsufficientData(ValidationError):
    pass


class InvalidParams(ValidationError):
    pass


class NonIntegrable(ValidationError):
    pass


class NonIntegrableShape(NonIntegrable):
    pass


class NonIntegrablePosterior(NonIntegrable):
    pass


class MomentDoesNotExist(ValidationError):
    pass


class ParseError(ValidationError):
    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class NotPositiveDefinite(NumericalError):
    pass


class CliqueNotPositiveDefinite(NotPositiveDefinite):
    pass


class SingularPrecision(NumericalError):
    pass
