"""Exception hierarchy shared by all modules."""


class MSDError(Exception):
    """Base class for library errors."""


class DimensionMismatch(MSDError, ValueError):
    pass


class InvalidSize(MSDError, ValueError):
    pass


class InvalidParameter(MSDError, ValueError):
    def __init__(self, message, *, field=None):
        self.field = field
        super().__init__(message)


class ZeroVector(MSDError, ValueError):
    pass


class NumericalError(MSDError, ArithmeticError):
    """Failures the CLI reports with exit code 3."""


class RankDeficient(NumericalError):
    pass


class GammaTooLarge(NumericalError):
    """gamma >= 1, so the lower sandwich bound is vacuous."""


class DegenerateSubspace(MSDError, ValueError):
    pass


class ParseError(MSDError, ValueError):
    def __init__(self, message, *, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
