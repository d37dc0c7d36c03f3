"""Exception hierarchy.

All parser and data errors derive from :class:`DataError`; solver failures
derive from :class:`SolverError`. The CLI maps these onto exit codes.
"""

from __future__ import annotations


class HydronetError(Exception):
    """Base class for all package errors."""


class DataError(HydronetError):
    """Malformed or inconsistent input data."""


class NetworkFileError(DataError):
    """Base class for network-file parse errors."""


class NetworkSyntaxError(NetworkFileError):
    def __init__(self, message: str, line: int, column: int | None = None):
        loc = f"line {line}" if column is None else f"line {line}, col {column}"
        super().__init__(f"{loc}: {message}")
        self.line = line
        self.column = column


class DuplicateIdError(NetworkFileError):
    def __init__(self, kind: str, ident: str):
        super().__init__(f"duplicate {kind} id {ident!r}")
        self.ident = ident


class DanglingReferenceError(NetworkFileError):
    def __init__(self, ident: str, context: str):
        super().__init__(f"{context} references unknown node {ident!r}")
        self.ident = ident


class DisconnectedNetworkError(NetworkFileError):
    def __init__(self, junctions: list[str]):
        shown = ", ".join(junctions[:5])
        more = "" if len(junctions) <= 5 else f" (+{len(junctions) - 5} more)"
        super().__init__(
            f"junctions not reachable from any fixed-head node: {shown}{more}"
        )
        self.junctions = junctions


class TimeSeriesError(DataError):
    """Malformed time-series input (CSV)."""


class NonMonotoneTimestampsError(TimeSeriesError):
    def __init__(self, row: int):
        super().__init__(f"timestamp at data row {row} is not after the previous row")
        self.row = row


class UnitMismatchError(TimeSeriesError):
    pass


class SolverError(HydronetError):
    """Hydraulic solve failed."""


class ConvergenceError(SolverError):
    def __init__(self, iterations: int, residual_flow: float, residual_head: float,
                 step: int | None = None):
        at = "" if step is None else f" at step {step}"
        super().__init__(
            f"no convergence after {iterations} iterations{at} "
            f"(mass residual {residual_flow:.3e} m3/s, head residual {residual_head:.3e} m)"
        )
        self.iterations = iterations
        self.residual_flow = residual_flow
        self.residual_head = residual_head
        self.step = step

    def with_step(self, step: int) -> "ConvergenceError":
        return ConvergenceError(self.iterations, self.residual_flow,
                                self.residual_head, step)


class SingularSystemError(SolverError):
    """The linearized system is singular (degenerate or disconnected network)."""


class ObjectiveEvaluationError(HydronetError):
    """Calibration objective could not be evaluated (solver failure)."""
