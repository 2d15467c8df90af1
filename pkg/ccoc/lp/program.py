"""
Linear Program Data Model

A maximization LP with general row relations and per-variable bounds,
stored as a sparse constraint matrix so that programs with tens of
thousands of rows stay cheap to build and to hand to a backend.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from ..core.errors import DimensionMismatch, ValidationError


class Relation(str, Enum):
    LE = "<="
    EQ = "="
    GE = ">="

    @classmethod
    def parse(cls, value) -> "Relation":
        if isinstance(value, Relation):
            return value
        aliases = {"<=": cls.LE, "L": cls.LE, "=": cls.EQ, "==": cls.EQ, "E": cls.EQ,
                   ">=": cls.GE, "G": cls.GE}
        try:
            return aliases[str(value).strip().upper()]
        except KeyError:
            raise ValidationError(f"Unknown constraint relation: {value}") from None


class LpStatus(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """max objective @ x  s.t.  matrix @ x (relation) rhs,  lower <= x <= upper."""

    objective: np.ndarray
    matrix: sparse.csr_matrix
    relations: Tuple[Relation, ...]
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    names: Optional[Tuple[str, ...]] = None
    row_names: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        objective = np.asarray(self.objective, dtype=np.float64).reshape(-1)
        matrix = sparse.csr_matrix(self.matrix, dtype=np.float64)
        n_vars = objective.shape[0]
        if matrix.shape[1] != n_vars:
            raise DimensionMismatch(
                f"constraint rows have {matrix.shape[1]} columns, expected {n_vars}"
            )
        rhs = np.asarray(self.rhs, dtype=np.float64).reshape(-1)
        relations = tuple(Relation.parse(r) for r in self.relations)
        if rhs.shape[0] != matrix.shape[0] or len(relations) != matrix.shape[0]:
            raise DimensionMismatch("rhs / relations length does not match row count")
        lower = np.asarray(self.lower, dtype=np.float64).reshape(-1)
        upper = np.asarray(self.upper, dtype=np.float64).reshape(-1)
        if lower.shape != (n_vars,) or upper.shape != (n_vars,):
            raise DimensionMismatch("bounds must have one entry per variable")
        if not (np.isfinite(objective).all() and np.isfinite(matrix.data).all()
                and np.isfinite(rhs).all()):
            raise ValidationError("LP coefficients must be finite")
        if (lower > upper).any() or np.isposinf(lower).any() or np.isneginf(upper).any():
            raise ValidationError("LP bounds are inconsistent")

        object.__setattr__(self, "objective", objective)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "relations", relations)
        object.__setattr__(self, "rhs", rhs)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if self.names is not None and len(self.names) != n_vars:
            raise DimensionMismatch("one name per variable required")
        if self.row_names is not None and len(self.row_names) != matrix.shape[0]:
            raise DimensionMismatch("one name per constraint required")

    @property
    def n_vars(self) -> int:
        return self.objective.shape[0]

    @property
    def n_constraints(self) -> int:
        return self.matrix.shape[0]

    def variable_names(self) -> Tuple[str, ...]:
        return self.names or tuple(f"x{j}" for j in range(self.n_vars))

    def constraint_names(self) -> Tuple[str, ...]:
        return self.row_names or tuple(f"c{i}" for i in range(self.n_constraints))

    @classmethod
    def from_rows(
        cls,
        objective: Sequence[float],
        rows: Iterable[Tuple[Sequence[float], object, float]],
        bounds: Optional[Sequence[Tuple[float, float]]] = None,
        names: Optional[Sequence[str]] = None,
    ) -> "LinearProgram":
        """Build from dense (coefficients, relation, rhs) rows; default bounds x >= 0."""
        objective = np.asarray(objective, dtype=np.float64)
        n_vars = objective.shape[0]
        rows = list(rows)
        coefficients = np.zeros((len(rows), n_vars))
        relations, rhs = [], []
        for i, (coeffs, relation, value) in enumerate(rows):
            coeffs = np.asarray(coeffs, dtype=np.float64)
            if coeffs.shape != (n_vars,):
                raise DimensionMismatch(
                    f"row {i} has {coeffs.shape[0]} coefficients, expected {n_vars}"
                )
            coefficients[i] = coeffs
            relations.append(Relation.parse(relation))
            rhs.append(value)
        if bounds is None:
            bounds = [(0.0, np.inf)] * n_vars
        lower = np.array([-np.inf if lo is None else lo for lo, _ in bounds], dtype=np.float64)
        upper = np.array([np.inf if up is None else up for _, up in bounds], dtype=np.float64)
        return cls(
            objective=objective,
            matrix=sparse.csr_matrix(coefficients.reshape(len(rows), n_vars)),
            relations=tuple(relations),
            rhs=np.array(rhs, dtype=np.float64),
            lower=lower,
            upper=upper,
            names=tuple(names) if names is not None else None,
        )

    def violation(self, x: np.ndarray) -> float:
        """Largest constraint or bound violation of a point."""
        activity = self.matrix @ x
        worst = 0.0
        for relation, lhs, rhs in zip(self.relations, activity, self.rhs):
            if relation is Relation.LE:
                worst = max(worst, lhs - rhs)
            elif relation is Relation.GE:
                worst = max(worst, rhs - lhs)
            else:
                worst = max(worst, abs(lhs - rhs))
        worst = max(worst, float(np.max(self.lower - x, initial=0.0)))
        worst = max(worst, float(np.max(x - self.upper, initial=0.0)))
        return worst


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: LpStatus
    objective: float = float("nan")
    primal: Optional[np.ndarray] = None
    iterations: int = 0
    backend: str = "simplex"
    diagnostics: dict = field(default_factory=dict)

    @property
    def is_optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "objective": self.objective,
            "primal": None if self.primal is None else self.primal.tolist(),
            "iterations": self.iterations,
            "backend": self.backend,
        }
