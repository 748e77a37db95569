"""Exception hierarchy.

Three families map onto the CLI exit codes: configuration problems (1),
bad input data (2) and numerical failures (3).
"""

from __future__ import annotations


class DynBLError(Exception):
    """Base class for every error raised by the package."""


class ConfigError(DynBLError):
    """Invalid run configuration (unknown key, bad value, missing path)."""


class DataError(DynBLError):
    """Input data is missing, malformed, or violates a panel invariant."""


class NumericalError(DynBLError):
    """An estimation or optimization step failed."""


class DimensionMismatch(DynBLError, ValueError):
    """Array shapes do not agree."""


# -- data ------------------------------------------------------------------


class MissingFile(DataError):
    pass


class MalformedHeader(DataError):
    pass


class MalformedValue(DataError):
    pass


class MalformedRow(DataError):
    pass


class MissingColumn(DataError):
    def __init__(self, name: str, path: str | None = None):
        self.name = name
        where = f" in {path}" if path else ""
        super().__init__(f"missing column {name!r}{where}")


class NonPositivePrice(DataError):
    def __init__(self, row: int, column: str, value: float, path: str | None = None):
        self.row = row
        self.column = column
        self.value = value
        where = f"{path}: " if path else ""
        super().__init__(
            f"{where}non-positive or non-finite price {value!r} at row {row}, column {column!r}"
        )


class DuplicateDate(DataError):
    pass


class TooFewRows(DataError):
    pass


class EmptyIntersection(DataError):
    pass


class WindowTooShort(DataError):
    pass


class InsufficientData(DataError):
    pass


class NegativeVol(DataError):
    pass


# -- numerics --------------------------------------------------------------


class NonFiniteInput(NumericalError):
    pass


class DidNotConverge(NumericalError):
    pass


class SingularMatrix(NumericalError):
    pass


class CholeskyFailure(NumericalError):
    pass


class NotPsd(NumericalError):
    pass


class Infeasible(NumericalError):
    pass


class ZeroVolatility(NumericalError):
    """Excess-return volatility is zero, so the Sharpe ratio is undefined."""


class EmptySeries(DynBLError, ValueError):
    pass
