"""Exception hierarchy shared by all modules."""


class DistinguoError(Exception):
    """Base class for every error raised by the package."""


class StructureError(DistinguoError, ValueError):
    pass


class ArityMismatch(StructureError):
    pass


class OutOfUniverse(StructureError):
    pass


class UnknownRelation(StructureError):
    pass


class EmptyCycle(StructureError):
    pass


class SignatureMismatch(DistinguoError, ValueError):
    pass


class BackendMismatch(DistinguoError, ValueError):
    pass


class FormulaError(DistinguoError, ValueError):
    pass


class FormulaSyntaxError(FormulaError):
    def __init__(self, message, position):
        super().__init__(f"{message} at position {position}")
        self.position = position


class ArityError(FormulaError):
    pass


class EqualityNotEnabled(FormulaError):
    pass


class UnboundVariable(FormulaError):
    pass


class BudgetExceeded(DistinguoError, RuntimeError):
    pass


class NotABijection(DistinguoError, ValueError):
    pass


class NoCertificate(DistinguoError, ValueError):
    pass


class TruncationTooSmall(DistinguoError, ValueError):
    pass


class DocumentError(DistinguoError, ValueError):
    """Malformed structure document; carries the 1-based line number."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line
