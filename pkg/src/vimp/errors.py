"""Exception hierarchy shared by every module."""


class VimpError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(VimpError, ValueError):
    pass


class IndexOutOfRangeError(VimpError, IndexError):
    pass


class DimensionMismatchError(VimpError, ValueError):
    pass


class EmptyInputError(VimpError, ValueError):
    pass


class RankDeficientError(VimpError, ArithmeticError):
    pass


class DegenerateFitError(VimpError, ArithmeticError):
    pass


class ZeroCoefficientError(VimpError, ArithmeticError):
    pass


class InsufficientDataError(VimpError, ValueError):
    pass


class SchemaMismatchError(VimpError, ValueError):
    pass
