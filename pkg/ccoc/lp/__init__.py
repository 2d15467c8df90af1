"""Linear programming: program model, solvers and value-function LP builders."""

from .builders import CcocLp, ValueIndex, build_lp1, build_lp2, extract_value_tables
from .program import LinearProgram, LpSolution, LpStatus, Relation
from .solver import SolverConfig, solve_lp

__all__ = [
    "CcocLp",
    "LinearProgram",
    "LpSolution",
    "LpStatus",
    "Relation",
    "SolverConfig",
    "ValueIndex",
    "build_lp1",
    "build_lp2",
    "extract_value_tables",
    "solve_lp",
]
