"""Exception hierarchy.

Each top-level class maps onto one CLI exit code, so the runner can translate
failures without inspecting messages.
"""


class GeaCarbonError(Exception):
    exit_code = 1


class ConfigError(GeaCarbonError):
    exit_code = 2


class DataError(GeaCarbonError, ValueError):
    exit_code = 3


class EstimationError(GeaCarbonError, ValueError):
    exit_code = 4


class RankDeficiencyError(EstimationError):
    """Raised when a design matrix does not have full column rank."""

    def __init__(self, message, columns=()):
        super().__init__(message)
        self.columns = tuple(columns)


class UnitMismatchError(DataError):
    pass
