"""
Value-Function LPs

LP1 maximizes J_0(x~_0) jointly over the multiplier lambda and the stage
value tables J_{0:N}; LP2 fixes lambda = lambda* and adds positive state
weights on stages 1..N so that its optimum is the full DP table.

Variable layout: [lambda] + J_{k,j} at offset + k * M + j, where M is the
number of augmented states. Constraint layout: M terminal rows first, then
one row per (k, j, i) in that order.
"""

from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
from loguru import logger
from scipy import sparse

from ..core.augment import AugmentedMdp
from ..core.errors import DimensionMismatch, NonpositiveWeight, StatusMismatch
from ..core.mdp import ValueTable
from .program import LinearProgram, LpSolution, Relation

CAP_WARNING_FRACTION = 1e-6


@dataclass(frozen=True)
class ValueIndex:
    """Maps (k, augmented state) to LP variable indices."""

    horizon: int
    n_states: int
    lambda_index: Optional[int] = None
    lambda_max: Optional[float] = None

    @property
    def offset(self) -> int:
        return 0 if self.lambda_index is None else 1

    def var_of(self, k: int, state: int) -> int:
        if not (0 <= k <= self.horizon and 0 <= state < self.n_states):
            raise DimensionMismatch(f"no value variable for (k={k}, state={state})")
        return self.offset + k * self.n_states + state

    def state_of(self, var: int) -> Tuple[int, int]:
        """Inverse of var_of."""
        k, state = divmod(var - self.offset, self.n_states)
        if var < self.offset or k > self.horizon:
            raise DimensionMismatch(f"variable {var} is not a value variable")
        return k, state

    @property
    def n_vars(self) -> int:
        return self.offset + (self.horizon + 1) * self.n_states


@dataclass(frozen=True, eq=False)
class CcocLp:
    """A built value LP with its index map; `kind` is 'lp1' or 'lp2'."""

    kind: str
    program: LinearProgram
    index: ValueIndex


def _names(index: ValueIndex, am: AugmentedMdp) -> Tuple[Tuple[str, ...], Tuple[str, ...]]:
    names = ["lambda"] if index.lambda_index is not None else []
    names += [f"J_{k}_{j}" for k in range(index.horizon + 1) for j in range(index.n_states)]
    rows = [f"term_{j}" for j in range(am.n_states)]
    rows += [
        f"stage_{k}_{j}_{i}"
        for k in range(am.horizon)
        for j in range(am.n_states)
        for i in range(am.n_actions)
    ]
    return tuple(names), tuple(rows)


def _constraints(
    am: AugmentedMdp, index: ValueIndex, terminal_lambda: Optional[np.ndarray]
) -> sparse.csr_matrix:
    """Sparse rows of J_N - lambda (alpha - delta) and J_k - T J_{k+1}."""
    n, m, a = am.horizon, am.n_states, am.n_actions
    n_rows = m + n * m * a
    rows, cols, vals = [], [], []

    terminal_rows = np.arange(m)
    rows.append(terminal_rows)
    cols.append(index.offset + n * m + terminal_rows)
    vals.append(np.ones(m))
    if terminal_lambda is not None:
        rows.append(terminal_rows)
        cols.append(np.full(m, index.lambda_index))
        vals.append(terminal_lambda)

    j_idx, i_idx = np.divmod(np.arange(m * a), a)
    src, act, dst = np.nonzero(am.model.transition)
    probabilities = am.model.transition[src, act, dst]
    for k in range(n):
        base = m + k * m * a
        rows.append(base + np.arange(m * a))
        cols.append(index.offset + k * m + j_idx)
        vals.append(np.ones(m * a))

        rows.append(base + src * a + act)
        cols.append(index.offset + (k + 1) * m + dst)
        vals.append(-probabilities)

    matrix = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n_rows, index.n_vars),
    )
    return matrix.tocsr()


def _stage_rhs(am: AugmentedMdp) -> np.ndarray:
    # stage_cost is (N, M, A); row order (k, j, i) matches a C-order ravel
    return am.model.stage_cost.reshape(-1)


def build_lp1(am: AugmentedMdp, alpha: float, lambda_max: float) -> CcocLp:
    """
    max J_0(x~_0) over lambda in [0, lambda_max] and free J.

    The optimal lambda is a maximizer of the dual function.
    """
    index = ValueIndex(am.horizon, am.n_states, lambda_index=0, lambda_max=float(lambda_max))
    delta = am.delta_states
    matrix = _constraints(am, index, terminal_lambda=-(alpha - delta))
    rhs = np.concatenate([am.model.terminal_cost, _stage_rhs(am)])

    objective = np.zeros(index.n_vars)
    objective[index.var_of(0, am.initial_augmented)] = 1.0
    lower = np.full(index.n_vars, -np.inf)
    upper = np.full(index.n_vars, np.inf)
    lower[0], upper[0] = 0.0, float(lambda_max)

    names, row_names = _names(index, am)
    program = LinearProgram(
        objective=objective,
        matrix=matrix,
        relations=(Relation.LE,) * matrix.shape[0],
        rhs=rhs,
        lower=lower,
        upper=upper,
        names=names,
        row_names=row_names,
    )
    logger.info(
        f"LP1: {program.n_vars} variables, {program.n_constraints} constraints, "
        f"{matrix.nnz} nonzeros"
    )
    return CcocLp("lp1", program, index)


def _weights(am: AugmentedMdp, nu: Union[float, np.ndarray]) -> np.ndarray:
    weights = np.asarray(nu, dtype=np.float64)
    if weights.ndim == 0:
        weights = np.full(am.n_states, float(weights))
    if weights.shape != (am.n_states,):
        raise DimensionMismatch(
            f"nu must be a scalar or have {am.n_states} entries, got shape {weights.shape}"
        )
    if not np.isfinite(weights).all() or (weights <= 0).any():
        raise NonpositiveWeight("every state weight nu_j must be positive and finite")
    return weights


def build_lp2(
    am: AugmentedMdp, alpha: float, lambda_star: float, nu: Union[float, np.ndarray] = 1.0
) -> CcocLp:
    """
    max J_0(x~_0) + sum_{k>=1} sum_j nu_j J_{k,j} with lambda fixed.

    Raises:
        NonpositiveWeight: some nu_j <= 0
    """
    weights = _weights(am, nu)
    index = ValueIndex(am.horizon, am.n_states)
    matrix = _constraints(am, index, terminal_lambda=None)
    terminal = am.model.terminal_cost + lambda_star * (alpha - am.delta_states)
    rhs = np.concatenate([terminal, _stage_rhs(am)])

    objective = np.zeros(index.n_vars)
    objective[index.var_of(0, am.initial_augmented)] = 1.0
    objective[index.var_of(1, 0):] = np.tile(weights, am.horizon)

    names, row_names = _names(index, am)
    program = LinearProgram(
        objective=objective,
        matrix=matrix,
        relations=(Relation.LE,) * matrix.shape[0],
        rhs=rhs,
        lower=np.full(index.n_vars, -np.inf),
        upper=np.full(index.n_vars, np.inf),
        names=names,
        row_names=row_names,
    )
    logger.info(
        f"LP2 at lambda*={lambda_star:.6g}: {program.n_vars} variables, "
        f"{program.n_constraints} constraints"
    )
    return CcocLp("lp2", program, index)


def extract_value_tables(sol: LpSolution, lp: CcocLp) -> Tuple[Optional[float], ValueTable]:
    """
    Read lambda (LP1 only) and the J table back from a solved value LP.

    Raises:
        StatusMismatch: the solution is not optimal
    """
    if not sol.is_optimal or sol.primal is None:
        raise StatusMismatch(f"cannot extract value tables from a {sol.status.value} solution")
    index = lp.index
    if sol.primal.shape != (index.n_vars,):
        raise StatusMismatch(
            f"solution has {sol.primal.shape[0]} entries, program has {index.n_vars}"
        )
    table = ValueTable(sol.primal[index.offset:].reshape(index.horizon + 1, index.n_states))
    if index.lambda_index is None:
        return None, table

    lam = float(sol.primal[index.lambda_index])
    if index.lambda_max is not None and lam >= index.lambda_max * (1.0 - CAP_WARNING_FRACTION):
        logger.warning(
            f"lambda*={lam:.6g} is at the cap {index.lambda_max:.6g}; "
            "the dual maximum may lie beyond it"
        )
    return lam, table
