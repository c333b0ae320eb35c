"""Exception types raised across the package."""


class FlameletError(Exception):
    """Base class for all package errors."""


class SchemaError(FlameletError):
    """CSV header or cell content does not match the flamelet schema."""


class EmptyDataset(FlameletError):
    pass


class MassFractionSum(FlameletError):
    def __init__(self, row: int, total: float):
        super().__init__(f"mass fractions at row {row} sum to {total!r}")
        self.row = row
        self.total = total


class DimensionMismatch(FlameletError, ValueError):
    pass


class ConfigError(FlameletError, ValueError):
    pass


class NonFiniteError(FlameletError, FloatingPointError):
    def __init__(self, message: str, layer: int | None = None):
        super().__init__(message)
        self.layer = layer


class TrainingError(FlameletError):
    """Training failed; ``member`` and ``n_members`` locate the failing run."""

    def __init__(self, message: str, member: int | None = None, n_members: int | None = None):
        super().__init__(message)
        self.member = member
        self.n_members = n_members


class UnsupportedVersion(FlameletError):
    pass


class Corrupted(FlameletError):
    def __init__(self, message: str, offset: int | None = None, member: int | None = None):
        super().__init__(message)
        self.offset = offset
        self.member = member


class InsufficientMembers(FlameletError, ValueError):
    pass


class FingerprintMismatch(FlameletError):
    pass
