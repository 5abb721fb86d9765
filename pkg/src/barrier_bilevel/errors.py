"""Exception hierarchy shared by every solver component."""

from __future__ import annotations


class BilevelError(Exception):
    """Base class; ``kind`` is the stable machine-readable name."""

    kind = "BilevelError"

    def __init__(self, message: str = ""):
        super().__init__(message or self.kind)


def _make(name: str, doc: str) -> type:
    return type(name, (BilevelError,), {"kind": name, "__doc__": doc})


NotSymmetric = _make("NotSymmetric", "Matrix asymmetry exceeds tolerance.")
NotPositiveDefinite = _make("NotPositiveDefinite", "Factorization failed after jitter escalation.")
DimensionMismatch = _make("DimensionMismatch", "Operand shapes disagree.")
OracleFailure = _make("OracleFailure", "A user oracle returned a non-finite value.")
NoInteriorPoint = _make("NoInteriorPoint", "Rejection sampling found no interior point.")
BoundaryViolation = _make("BoundaryViolation", "Point is not strictly inside the constraint set.")
MissingConstant = _make("MissingConstant", "A constant required by the setting is unset.")
EmptySet = _make("EmptySet", "The shrunk set has no points.")
Stalled = _make("Stalled", "Iterative projection did not reach tolerance.")
SlaterViolation = _make("SlaterViolation", "No strictly feasible point down to the slack floor.")
BudgetExhausted = _make("BudgetExhausted", "Iteration clamp reached before the exit test passed.")
Infeasible = _make("Infeasible", "Lower-level problem has no feasible point.")
RankDeficientActiveSet = _make("RankDeficientActiveSet", "Active-set KKT system is singular.")
NonUniqueOptimum = _make("NonUniqueOptimum", "Lower-level optimum is not unique.")
ResidualTooLarge = _make("ResidualTooLarge", "KKT residual exceeds tolerance.")
ConfigError = _make("ConfigError", "Invalid run configuration.")
