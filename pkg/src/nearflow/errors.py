"""Exception hierarchy shared by every module."""


class NearflowError(Exception):
    """Base class for domain errors (CLI exit code 3)."""


class NotInvertible(NearflowError):
    def __init__(self, message: str, *, what: str = "", detail: dict | None = None):
        super().__init__(message)
        self.what = what
        self.detail = detail or {}


class DomainError(NearflowError, ValueError):
    pass


class DimensionMismatch(NearflowError, ValueError):
    pass


class DegenerateDenominator(NearflowError, ArithmeticError):
    pass


class InvalidParams(NearflowError, ValueError):
    pass


class ConfigError(NearflowError, ValueError):
    pass


class RankDeficient(NearflowError):
    def __init__(self, message: str, *, rank: int, columns: int):
        super().__init__(message)
        self.rank = rank
        self.columns = columns
