"""
Dense Primal Simplex

Two-phase tableau simplex with bounded variables. Free variables are
split, equality rows are split into two inequalities, and every row is
normalized to <= before slacks and (where needed) artificials are added.
Pricing is Dantzig's largest reduced cost; after `degeneracy_streak`
consecutive degenerate pivots it falls back to Bland's rule until the
objective moves again. All ties resolve to the lowest index, so identical
inputs produce identical pivot sequences.
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from loguru import logger

from ..core.errors import NumericalFailure
from .program import LinearProgram, LpSolution, LpStatus, Relation


@dataclass(frozen=True)
class SimplexTolerances:
    feas_tol: float = 1e-9
    opt_tol: float = 1e-9
    pivot_tol: float = 1e-11
    max_iter: int = 1_000_000
    degeneracy_streak: int = 50


class _StandardForm:
    """
    Rewrites an LP over x into  max c.y  s.t.  G y <= h,  0 <= y <= u
    with x = offset + S y.
    """

    def __init__(self, program: LinearProgram):
        n = program.n_vars
        lower, upper = program.lower, program.upper
        columns: List[Tuple[int, float]] = []
        y_upper: List[float] = []
        offset = np.zeros(n)
        for j in range(n):
            if np.isfinite(lower[j]):
                offset[j] = lower[j]
                columns.append((j, 1.0))
                y_upper.append(upper[j] - lower[j])
            elif np.isfinite(upper[j]):
                offset[j] = upper[j]
                columns.append((j, -1.0))
                y_upper.append(np.inf)
            else:
                columns.append((j, 1.0))
                y_upper.append(np.inf)
                columns.append((j, -1.0))
                y_upper.append(np.inf)

        self.n_original = n
        self.offset = offset
        self.substitution = np.zeros((n, len(columns)))
        for col, (j, sign) in enumerate(columns):
            self.substitution[j, col] = sign
        self.upper = np.array(y_upper)

        dense = program.matrix.toarray()
        shifted_rhs = program.rhs - dense @ offset
        transformed = dense @ self.substitution

        rows, rhs = [], []
        for i, relation in enumerate(program.relations):
            if relation in (Relation.LE, Relation.EQ):
                rows.append(transformed[i])
                rhs.append(shifted_rhs[i])
            if relation in (Relation.GE, Relation.EQ):
                rows.append(-transformed[i])
                rhs.append(-shifted_rhs[i])
        n_y = len(columns)
        self.matrix = np.array(rows).reshape(len(rows), n_y)
        self.rhs = np.array(rhs, dtype=np.float64)
        self.cost = program.objective @ self.substitution
        self.constant = float(program.objective @ offset)

    def recover(self, y: np.ndarray) -> np.ndarray:
        return self.offset + self.substitution @ y


class DenseSimplex:
    """Bounded-variable tableau simplex for small and medium dense programs."""

    def __init__(self, program: LinearProgram, tolerances: Optional[SimplexTolerances] = None):
        self.program = program
        self.tol = tolerances or SimplexTolerances()
        self.form = _StandardForm(program)
        self.iterations = 0
        self._build_tableau()

    def _build_tableau(self) -> None:
        form = self.form
        m, n_y = form.matrix.shape
        negative = form.rhs < 0
        n_art = int(negative.sum())
        n_cols = n_y + m + n_art

        sign = np.where(negative, -1.0, 1.0)
        tableau = np.zeros((m, n_cols))
        tableau[:, :n_y] = form.matrix * sign[:, None]
        tableau[np.arange(m), n_y + np.arange(m)] = sign
        basis = n_y + np.arange(m)
        art_rows = np.flatnonzero(negative)
        art_cols = n_y + m + np.arange(n_art)
        tableau[art_rows, art_cols] = 1.0
        basis[art_rows] = art_cols

        self.n_y = n_y
        self.n_art = n_art
        self.tableau = tableau
        self.initial = tableau.copy()
        self.rhs0 = np.abs(form.rhs)
        self.x_basic = np.abs(form.rhs)
        self.basis = basis.astype(np.int64)
        self.upper = np.concatenate([form.upper, np.full(m + n_art, np.inf)])
        self.at_upper = np.zeros(n_cols, dtype=bool)
        self.is_basic = np.zeros(n_cols, dtype=bool)
        self.is_basic[self.basis] = True
        self.blocked = np.zeros(n_cols, dtype=bool)

    # -- pricing and ratio test -------------------------------------------

    def _reduced_costs(self, cost: np.ndarray) -> np.ndarray:
        return cost - cost[self.basis] @ self.tableau

    def _entering(self, reduced: np.ndarray, bland: bool) -> Tuple[Optional[int], int]:
        eligible = ~self.is_basic & ~self.blocked
        increase = eligible & ~self.at_upper & (reduced > self.tol.opt_tol)
        decrease = eligible & self.at_upper & (reduced < -self.tol.opt_tol)
        candidates = increase | decrease
        if not candidates.any():
            return None, 0
        if bland:
            j = int(np.flatnonzero(candidates)[0])
        else:
            score = np.where(candidates, np.abs(reduced), -1.0)
            j = int(np.argmax(score))
        return j, (1 if increase[j] else -1)

    def _ratio_test(self, j: int, direction: int) -> Tuple[float, Optional[int]]:
        column = direction * self.tableau[:, j]
        ratios = np.full(column.shape, np.inf)
        falling = column > self.tol.pivot_tol
        ratios[falling] = np.maximum(self.x_basic[falling], 0.0) / column[falling]
        basic_upper = self.upper[self.basis]
        rising = (column < -self.tol.pivot_tol) & np.isfinite(basic_upper)
        ratios[rising] = np.maximum(basic_upper[rising] - self.x_basic[rising], 0.0) / -column[rising]

        if not np.isfinite(ratios).any():
            return np.inf, None
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + 1e-12 * (1.0 + best))
        row = int(ties[np.argmin(self.basis[ties])])
        return float(ratios[row]), row

    def _pivot(self, row: int, j: int) -> None:
        tableau = self.tableau
        pivot_row = tableau[row] / tableau[row, j]
        column = tableau[:, j].copy()
        column[row] = 0.0
        tableau -= np.outer(column, pivot_row)
        tableau[row] = pivot_row

    # -- main loop --------------------------------------------------------

    def _iterate(self, cost: np.ndarray, phase: int) -> LpStatus:
        reduced = self._reduced_costs(cost)
        streak = 0
        bland = False
        while True:
            j, direction = self._entering(reduced, bland)
            if j is None:
                return LpStatus.OPTIMAL
            if self.iterations >= self.tol.max_iter:
                raise NumericalFailure(
                    f"Simplex exceeded {self.tol.max_iter} iterations in phase {phase}"
                )
            self.iterations += 1

            step_row, row = self._ratio_test(j, direction)
            step_flip = self.upper[j]
            if not np.isfinite(step_row) and not np.isfinite(step_flip):
                return LpStatus.UNBOUNDED

            column = direction * self.tableau[:, j]
            if step_flip <= step_row:
                step = step_flip
                self.x_basic -= step * column
                self.at_upper[j] = not self.at_upper[j]
            else:
                step = step_row
                entering_value = (self.upper[j] if self.at_upper[j] else 0.0) + direction * step
                self.x_basic -= step * column
                leaving = int(self.basis[row])
                self.at_upper[leaving] = column[row] < 0
                self.is_basic[leaving] = False
                self._pivot(row, j)
                reduced = reduced - reduced[j] * self.tableau[row]
                self.basis[row] = j
                self.is_basic[j] = True
                self.at_upper[j] = False
                self.x_basic[row] = entering_value

            if step <= self.tol.feas_tol:
                streak += 1
                if streak > self.tol.degeneracy_streak and not bland:
                    logger.debug(f"Degenerate streak of {streak} pivots; switching to Bland's rule")
                    bland = True
            else:
                streak = 0
                bland = False

    def _nonbasic_values(self) -> np.ndarray:
        values = np.where(self.at_upper, self.upper, 0.0)
        values[self.is_basic] = 0.0
        return values

    def _drive_out_artificials(self) -> None:
        artificial = np.zeros(self.tableau.shape[1], dtype=bool)
        artificial[self.n_y + self.tableau.shape[0]:] = True
        keep = np.ones(self.tableau.shape[0], dtype=bool)
        for row in range(self.tableau.shape[0]):
            if not artificial[self.basis[row]]:
                continue
            candidates = np.flatnonzero(
                ~artificial & ~self.is_basic & (np.abs(self.tableau[row]) > self.tol.pivot_tol)
            )
            if candidates.size == 0:
                keep[row] = False
                continue
            j = int(candidates[0])
            value = self.upper[j] if self.at_upper[j] else 0.0
            self.is_basic[self.basis[row]] = False
            self._pivot(row, j)
            self.basis[row] = j
            self.is_basic[j] = True
            self.at_upper[j] = False
            self.x_basic[row] = value
        if not keep.all():
            logger.debug(f"Dropping {int((~keep).sum())} redundant rows after phase 1")
            self.tableau = self.tableau[keep]
            self.initial = self.initial[keep]
            self.rhs0 = self.rhs0[keep]
            self.x_basic = self.x_basic[keep]
            self.basis = self.basis[keep]
        self.blocked |= artificial

    def _refine(self) -> None:
        """Recompute basic values from the original columns."""
        if not self.basis.size:
            return
        basis_matrix = self.initial[:, self.basis]
        rhs = self.rhs0 - self.initial @ self._nonbasic_values()
        try:
            self.x_basic = np.linalg.solve(basis_matrix, rhs)
        except np.linalg.LinAlgError:
            logger.warning("Basis matrix singular during refinement; keeping tableau values")

    def _full_y(self) -> np.ndarray:
        values = self._nonbasic_values()
        values[self.basis] = self.x_basic
        return values[: self.n_y]

    def solve(self) -> LpSolution:
        n_cols = self.tableau.shape[1]
        if self.n_art:
            phase_one = np.zeros(n_cols)
            phase_one[self.n_y + self.tableau.shape[0]:] = -1.0
            self._iterate(phase_one, phase=1)
            infeasibility = float(self.x_basic[self.basis >= self.n_y + self.tableau.shape[0]].sum())
            if infeasibility > self.tol.feas_tol * (1.0 + np.abs(self.rhs0).max()):
                logger.debug(f"Phase 1 ended with infeasibility {infeasibility:.3e}")
                return LpSolution(LpStatus.INFEASIBLE, iterations=self.iterations)
            self._drive_out_artificials()

        cost = np.zeros(self.tableau.shape[1])
        cost[: self.n_y] = self.form.cost
        status = self._iterate(cost, phase=2)
        if status is LpStatus.UNBOUNDED:
            return LpSolution(LpStatus.UNBOUNDED, iterations=self.iterations)

        self._refine()
        x = self.form.recover(self._full_y())
        objective = float(self.program.objective @ x)
        violation = self.program.violation(x)
        scale = 1.0 + float(np.abs(self.program.rhs).max(initial=0.0))
        if violation > self.tol.feas_tol * scale:
            logger.warning(f"Simplex solution violates constraints by {violation:.3e}")
        logger.debug(f"Simplex optimal after {self.iterations} iterations, objective {objective!r}")
        return LpSolution(
            LpStatus.OPTIMAL,
            objective=objective,
            primal=x,
            iterations=self.iterations,
            backend="simplex",
            diagnostics={"max_violation": violation},
        )


def dense_cells(program: LinearProgram) -> int:
    """Tableau size the dense simplex would allocate (rows x columns, upper estimate)."""
    free = int((np.isneginf(program.lower) & np.isposinf(program.upper)).sum())
    rows = program.n_constraints + sum(r is Relation.EQ for r in program.relations)
    return rows * (program.n_vars + free + 2 * rows)
