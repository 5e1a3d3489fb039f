"""Exception hierarchy shared by every module.

Each class carries the process exit code the CLI maps it to.
"""

from typing import Any, Optional


class LabError(Exception):
    exit_code = 2


# --------- Validation --------- #

class ParameterError(LabError):
    """A problem parameter violates a named invariant."""

    def __init__(self, invariant: str, message: str):
        super().__init__(f"[{invariant}] {message}")
        self.invariant = invariant


class InvalidDimensionError(ParameterError):
    def __init__(self, message: str):
        super().__init__("dimension", message)


class ExponentRangeError(ParameterError):
    def __init__(self, message: str):
        super().__init__("exponent-range", message)


class CouplingError(ParameterError):
    pass


class InvalidPairError(LabError):
    pass


class DivisionDomainError(LabError):
    pass


class UndefinedQuotientError(LabError):
    pass


class ConfigError(LabError):
    pass


class WrongRegimeError(LabError):
    pass


class HypothesisError(LabError):
    """An analytic hypothesis required by a construction does not hold."""

    def __init__(self, message: str, hypothesis: str = "unspecified"):
        super().__init__(message)
        self.hypothesis = hypothesis


class SingularSystemError(HypothesisError):
    pass


# --------- Grids and I/O --------- #

class GridError(LabError):
    pass


class GridMismatchError(GridError):
    pass


class TruncationError(GridError):
    def __init__(self, message: str, lost_fraction: float):
        super().__init__(f"{message} (lost fraction {lost_fraction:.3e})")
        self.lost_fraction = lost_fraction


class SnapshotFormatError(LabError):
    pass


class ReportIOError(LabError):
    pass


# --------- Solvers --------- #

class ConvergenceError(LabError):
    exit_code = 3

    def __init__(self, message: str, outcome: Optional[Any] = None):
        super().__init__(message)
        self.outcome = outcome


# --------- Time stepping --------- #

class SimulationAbort(LabError):
    exit_code = 4

    def __init__(self, message: str, report: Optional[Any] = None, last_reliable_time: float = 0.0):
        super().__init__(message)
        self.report = report
        self.last_reliable_time = last_reliable_time


class ResolutionLossError(SimulationAbort):
    pass


class NonFiniteStateError(SimulationAbort):
    pass


class BlowUpCeilingError(SimulationAbort):
    pass
