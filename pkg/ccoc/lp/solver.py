"""
LP Solver Front-End

`solve_lp` routes a LinearProgram to the builtin dense simplex or to
HiGHS according to SolverConfig.backend.
"""

from dataclasses import dataclass
from typing import Optional

from loguru import logger

from ..core.errors import ValidationError
from .highs import solve_highs
from .program import LinearProgram, LpSolution
from .simplex import DenseSimplex, SimplexTolerances, dense_cells

BACKENDS = ("auto", "simplex", "highs")


@dataclass(frozen=True)
class SolverConfig:
    """Solver tolerances and backend choice."""

    feas_tol: float = 1e-9
    opt_tol: float = 1e-9
    pivot_tol: float = 1e-11
    max_iter: int = 1_000_000
    degeneracy_streak: int = 50
    backend: str = "auto"
    dense_limit: int = 20_000_000

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ValidationError(
                f"Unsupported LP backend: {self.backend}. Supported: {', '.join(BACKENDS)}"
            )

    @property
    def tolerances(self) -> SimplexTolerances:
        return SimplexTolerances(
            feas_tol=self.feas_tol,
            opt_tol=self.opt_tol,
            pivot_tol=self.pivot_tol,
            max_iter=self.max_iter,
            degeneracy_streak=self.degeneracy_streak,
        )

    @classmethod
    def from_settings(cls, **overrides) -> "SolverConfig":
        from ..config import settings

        values = {"backend": settings.LP_BACKEND, "dense_limit": settings.DENSE_LIMIT}
        values.update(overrides)
        return cls(**values)


def select_backend(program: LinearProgram, config: SolverConfig) -> str:
    if config.backend != "auto":
        return config.backend
    return "simplex" if dense_cells(program) <= config.dense_limit else "highs"


def solve_lp(program: LinearProgram, config: Optional[SolverConfig] = None) -> LpSolution:
    """
    Solve a maximization LP.

    Infeasible and unbounded programs are reported through the returned
    status; only iteration exhaustion raises NumericalFailure.
    """
    config = config or SolverConfig()
    backend = select_backend(program, config)
    logger.debug(
        f"Solving LP with {program.n_vars} variables and {program.n_constraints} "
        f"constraints on backend '{backend}'"
    )
    if backend == "highs":
        return solve_highs(program, config.feas_tol, config.opt_tol, config.max_iter)
    return DenseSimplex(program, config.tolerances).solve()
