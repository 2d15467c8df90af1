"""
Exception hierarchy for ccoc.

Input problems derive from ModelError and map to CLI exit code 1;
infeasibility maps to 2 and solver breakdowns to 3.
"""

from typing import Optional


class CcocError(Exception):
    """Base class for every error raised by ccoc."""


class ModelError(CcocError):
    """Problem with a user-supplied model, specification or argument."""


class ValidationError(ModelError):
    """A model or specification invariant does not hold."""


class RowSumError(ValidationError):
    """A transition row is not a probability distribution."""

    def __init__(self, state: int, action: int, total: float):
        self.state = state
        self.action = action
        self.total = total
        super().__init__(
            f"Transition row (s={state}, a={action}) sums to {total!r}, expected 1"
        )


class ProbabilityRangeError(ValidationError):
    """A transition entry lies outside [0, 1]."""


class NegativeCost(ValidationError):
    """A stage or terminal cost is negative or not finite."""


class IndexOutOfRange(ValidationError):
    """A state or action index lies outside its index set."""


class OverlapError(ValidationError):
    """Safe set and target set intersect."""

    def __init__(self, overlap):
        self.overlap = sorted(overlap)
        super().__init__(f"Safe and target sets overlap on states {self.overlap}")


class AlphaRangeError(ValidationError):
    """Required success probability outside [0, 1]."""


class DimensionMismatch(ModelError):
    """Array shapes of a policy, table or model do not agree."""


class NonpositiveWeight(ModelError):
    """An LP state weight is not strictly positive."""


class ParseError(ModelError):
    """A model document could not be parsed."""

    def __init__(self, path: str, detail: str = "", line: Optional[int] = None):
        self.path = path
        self.line = line
        where = f"line {line}: " if line is not None else ""
        message = f"{where}{path}"
        if detail:
            message = f"{message}: {detail}"
        super().__init__(message)


class InfeasibleError(CcocError):
    """The required success probability exceeds the maximal achievable safety."""

    def __init__(self, max_safety: float, alpha: float):
        self.max_safety = max_safety
        self.alpha = alpha
        super().__init__(
            f"Infeasible: alpha={alpha:.6f} exceeds maximal safety {max_safety:.6f}"
        )


class InfeasiblePair(CcocError):
    """The safest lambda-optimal policy does not reach alpha."""


class LpFailure(CcocError):
    """An LP did not reach an optimal status."""


class NumericalFailure(LpFailure):
    """The solver exhausted its iteration budget or broke down numerically."""


class StatusMismatch(CcocError):
    """Value tables were requested from a non-optimal LP solution."""


class EmptyActionSet(CcocError):
    """A restricted recursion met a state with no admissible action."""


class CapExceeded(CcocError):
    """Policy enumeration would exceed the configured cap."""
