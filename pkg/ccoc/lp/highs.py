"""
HiGHS backend through scipy.optimize.linprog for programs too large for
the dense tableau.
"""

import numpy as np
from loguru import logger
from scipy import sparse
from scipy.optimize import linprog

from ..core.errors import NumericalFailure
from .program import LinearProgram, LpSolution, LpStatus, Relation

_STATUS = {0: LpStatus.OPTIMAL, 2: LpStatus.INFEASIBLE, 3: LpStatus.UNBOUNDED}


def solve_highs(program: LinearProgram, feas_tol: float, opt_tol: float, max_iter: int) -> LpSolution:
    relations = np.array([r.value for r in program.relations])
    le = relations == Relation.LE.value
    ge = relations == Relation.GE.value
    eq = relations == Relation.EQ.value

    matrix = program.matrix
    inequality_rows = sparse.vstack([matrix[le], -matrix[ge]], format="csr")
    inequality_rhs = np.concatenate([program.rhs[le], -program.rhs[ge]])
    bounds = [
        (None if np.isneginf(lo) else lo, None if np.isposinf(up) else up)
        for lo, up in zip(program.lower, program.upper)
    ]

    kwargs = {}
    if inequality_rows.shape[0]:
        kwargs.update(A_ub=inequality_rows, b_ub=inequality_rhs)
    if eq.any():
        kwargs.update(A_eq=matrix[eq], b_eq=program.rhs[eq])

    logger.debug(
        f"HiGHS: {program.n_vars} variables, {program.n_constraints} constraints, "
        f"{matrix.nnz} nonzeros"
    )
    result = linprog(
        -program.objective,
        bounds=bounds,
        method="highs",
        options={
            "primal_feasibility_tolerance": feas_tol,
            "dual_feasibility_tolerance": opt_tol,
            "maxiter": max_iter,
        },
        **kwargs,
    )
    iterations = int(getattr(result, "nit", 0) or 0)
    status = _STATUS.get(result.status)
    if status is None:
        raise NumericalFailure(f"HiGHS stopped with status {result.status}: {result.message}")
    if status is not LpStatus.OPTIMAL:
        return LpSolution(status, iterations=iterations, backend="highs")

    x = np.asarray(result.x, dtype=np.float64)
    violation = program.violation(x)
    return LpSolution(
        LpStatus.OPTIMAL,
        objective=float(program.objective @ x),
        primal=x,
        iterations=iterations,
        backend="highs",
        diagnostics={"max_violation": violation},
    )
