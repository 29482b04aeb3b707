"""
Exception hierarchy.

The CLI maps these onto exit codes: input errors → 1, model infeasibility → 2,
solver failures → 3.
"""

from typing import Any, Optional


class RevprefError(Exception):
    """Base class for all toolkit errors."""


class DataValidationError(RevprefError, ValueError):
    """Malformed or invalid input data.

    Parameters
    ----------
    message : str
        Human-readable description.
    row : int, optional
        1-based data row number in the source file, when known.
    """

    def __init__(self, message: str, *, row: Optional[int] = None) -> None:
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class GenericityError(DataValidationError):
    """Some expenditure gap used by the robustness margin is zero."""

    def __init__(self, message: str, *, pair: tuple[int, int]) -> None:
        self.pair = pair
        super().__init__(f"{message} (pair {pair})")


class ModelInfeasibleError(RevprefError):
    """The data are inconsistent with a model whose feasibility was required."""


class RationalityViolationError(ModelInfeasibleError):
    """GARP or GAPP fails; ``witness`` is the offending cycle."""

    def __init__(self, axiom: str, witness: Any) -> None:
        self.axiom = axiom
        self.witness = witness
        super().__init__(f"{axiom} violated; cycle {list(witness.sequence)}")


class InfeasibleConstraintsError(ModelInfeasibleError):
    """A constraint set (floors, θ restriction, Aν = π) admits no point."""


class OnBoundaryError(ModelInfeasibleError):
    """A normalized choice lies on another budget plane."""

    def __init__(self, budget: int, other: int, gap: float) -> None:
        self.budget = budget
        self.other = other
        self.gap = gap
        super().__init__(
            f"choice on budget {budget} lies on budget {other} "
            f"(|p'x - 1| = {gap:.3e})"
        )


class TypeBudgetExceededError(RevprefError):
    """Type enumeration would exceed the configured column cap."""

    def __init__(self, cap: int, reached: int) -> None:
        self.cap = cap
        self.reached = reached
        super().__init__(
            f"type enumeration exceeded cap {cap} after {reached} prefixes"
        )


class SolverError(RevprefError, RuntimeError):
    """Internal solver failure (iteration cap, stall, inconsistent state)."""

    def __init__(self, message: str, diagnostics: Optional[dict[str, Any]] = None) -> None:
        self.diagnostics = diagnostics or {}
        super().__init__(message)
