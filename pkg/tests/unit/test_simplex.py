"""Unit tests for the LP data model and the dense simplex.

Each hand-checkable program is given as (objective, rows, bounds) with
its expected status, optimum and, where unique, optimal point.
"""

import numpy as np
import pytest

from ccoc.core.errors import DimensionMismatch, NumericalFailure, ValidationError
from ccoc.lp import LinearProgram, LpStatus, Relation, SolverConfig, solve_lp
from ccoc.lp.simplex import DenseSimplex, SimplexTolerances, dense_cells
from ccoc.lp.solver import select_backend

FREE = (None, None)
NONNEG = (0.0, None)

HAND_LPS = {
    "single_bound": ([1], [([1], "<=", 3)], None, 3.0, [3.0]),
    "tie_on_sum": ([1, 1], [([1, 1], "<=", 1)], None, 1.0, None),
    "two_piece_dual": ([0, 1], [([-1, 1], "<=", 5), ([1, 1], "<=", 7)], [NONNEG, FREE], 6.0, [1.0, 6.0]),
    "textbook_2d": ([3, 2], [([1, 1], "<=", 4), ([1, 3], "<=", 6), ([1, 0], "<=", 3)], None, 11.0, [3.0, 1.0]),
    "paint_mix": (
        [5, 4],
        [([6, 4], "<=", 24), ([1, 2], "<=", 6), ([-1, 1], "<=", 1), ([0, 1], "<=", 2)],
        None,
        21.0,
        [3.0, 1.5],
    ),
    "covering": ([-1, -1], [([1, 2], ">=", 4), ([3, 1], ">=", 6)], None, -2.8, [1.6, 1.2]),
    "equality": ([1, 2], [([1, 1], "=", 3), ([0, 1], "<=", 2)], None, 5.0, [1.0, 2.0]),
    "degenerate_box": ([1, 1], [([1, 0], "<=", 1), ([0, 1], "<=", 1), ([1, 1], "<=", 2)], None, 2.0, [1.0, 1.0]),
    "cycling_prone": (
        [10, -57, -9, -24],
        [
            ([0.5, -5.5, -2.5, 9], "<=", 0),
            ([0.5, -1.5, -0.5, 1], "<=", 0),
            ([1, 0, 0, 0], "<=", 1),
        ],
        None,
        1.0,
        [1.0, 0.0, 1.0, 0.0],
    ),
    "box_only": ([1, 1], [], [(0.0, 2.0), (0.0, 3.0)], 5.0, [2.0, 3.0]),
    "lower_shift": ([-1], [([1], "<=", 10)], [(2.0, None)], -2.0, [2.0]),
    "upper_only": ([1], [([1], ">=", -10)], [(None, 4.0)], 4.0, [4.0]),
    "free_negative": ([-1], [([-1], "<=", 3)], [FREE], 3.0, [-3.0]),
    "phase_one": ([-1, -1], [([1, 1], ">=", 2)], None, -2.0, None),
    "redundant_equalities": ([1, 0], [([1, 1], "=", 2), ([2, 2], "=", 4)], None, 2.0, [2.0, 0.0]),
    "zero_objective": ([0], [([1], "<=", 1)], None, 0.0, None),
    "negative_rhs": ([1], [([-1], "<=", -1), ([1], "<=", 5)], None, 5.0, [5.0]),
    "three_vars": ([2, 3, 4], [([3, 2, 1], "<=", 10), ([2, 5, 3], "<=", 15)], None, 20.0, [0.0, 0.0, 5.0]),
    "flip_then_pivot": ([1, 1], [([1, 1], "<=", 3)], [(0.0, 2.0), (0.0, 2.0)], 3.0, None),
    "three_piece_dual": (
        [0, 1],
        [([-2, 1], "<=", 0), ([1, 1], "<=", 4)],
        [(0.0, 10.0), FREE],
        8.0 / 3.0,
        [4.0 / 3.0, 8.0 / 3.0],
    ),
    "lambda_at_cap": ([0, 1], [([-1, 1], "<=", 0)], [(0.0, 5.0), FREE], 5.0, [5.0, 5.0]),
    "mixed_relations": (
        [1, 1, 1],
        [([1, 1, 0], "=", 2), ([0, 1, 1], "<=", 2), ([1, 0, -1], ">=", 0)],
        None,
        4.0,
        [2.0, 0.0, 2.0],
    ),
    "ge_with_upper_bounds": ([-3, -1], [([1, 1], ">=", 3)], [(0.0, 2.0), (0.0, 2.0)], -5.0, [1.0, 2.0]),
    "fractional_vertex": ([1, 1], [([2, 1], "<=", 4), ([1, 2], "<=", 4)], None, 8.0 / 3.0, [4.0 / 3.0, 4.0 / 3.0]),
    "negative_lower_bound": ([1], [([1], "<=", 0.5)], [(-2.0, 1.0)], 0.5, [0.5]),
}

UNBOUNDED_LPS = {
    "ray": ([1, 0], [([1, -1], "<=", 1)], None),
    "free_no_rows": ([1], [], [FREE]),
    "free_below": ([-1], [([1], "<=", 4)], [FREE]),
}

INFEASIBLE_LPS = {
    "crossed_bounds": ([1], [([1], "<=", 1), ([1], ">=", 2)], None),
    "negative_sum": ([1, 1], [([1, 1], "=", -1)], None),
    "nonneg_below_zero": ([1], [([1], "<=", -1)], None),
}


def _program(objective, rows, bounds):
    return LinearProgram.from_rows(objective, rows, bounds)


def _solve(objective, rows, bounds, backend="simplex"):
    return solve_lp(_program(objective, rows, bounds), SolverConfig(backend=backend))


@pytest.mark.unit
class TestHandLps:

    @pytest.mark.parametrize("name", sorted(HAND_LPS))
    def test_optimum(self, name):
        objective, rows, bounds, value, point = HAND_LPS[name]
        solution = _solve(objective, rows, bounds)
        assert solution.status is LpStatus.OPTIMAL
        assert solution.objective == pytest.approx(value, abs=1e-9)
        assert solution.diagnostics["max_violation"] <= 1e-9
        if point is not None:
            np.testing.assert_allclose(solution.primal, point, atol=1e-9)

    @pytest.mark.parametrize("name", sorted(UNBOUNDED_LPS))
    def test_unbounded(self, name):
        solution = _solve(*UNBOUNDED_LPS[name])
        assert solution.status is LpStatus.UNBOUNDED
        assert solution.primal is None

    @pytest.mark.parametrize("name", sorted(INFEASIBLE_LPS))
    def test_infeasible(self, name):
        solution = _solve(*INFEASIBLE_LPS[name])
        assert solution.status is LpStatus.INFEASIBLE

    @pytest.mark.parametrize("name", ["textbook_2d", "covering", "two_piece_dual", "mixed_relations"])
    def test_highs_agrees(self, name):
        objective, rows, bounds, value, _ = HAND_LPS[name]
        solution = _solve(objective, rows, bounds, backend="highs")
        assert solution.backend == "highs"
        assert solution.objective == pytest.approx(value, abs=1e-7)

    def test_highs_reports_infeasible(self):
        assert _solve(*INFEASIBLE_LPS["crossed_bounds"], backend="highs").status is LpStatus.INFEASIBLE


@pytest.mark.unit
class TestDeterminism:

    @pytest.mark.parametrize("name", ["tie_on_sum", "cycling_prone", "redundant_equalities"])
    def test_identical_runs(self, name):
        objective, rows, bounds, _, _ = HAND_LPS[name]
        first = _solve(objective, rows, bounds)
        second = _solve(objective, rows, bounds)
        assert first.primal.tobytes() == second.primal.tobytes()
        assert first.iterations == second.iterations

    def test_iteration_cap(self):
        objective, rows, bounds, _, _ = HAND_LPS["paint_mix"]
        solver = DenseSimplex(_program(objective, rows, bounds), SimplexTolerances(max_iter=1))
        with pytest.raises(NumericalFailure):
            solver.solve()

    def test_bland_fallback_still_optimal(self):
        objective, rows, bounds, value, _ = HAND_LPS["cycling_prone"]
        solver = DenseSimplex(_program(objective, rows, bounds), SimplexTolerances(degeneracy_streak=0))
        solution = solver.solve()
        assert solution.objective == pytest.approx(value, abs=1e-9)


@pytest.mark.unit
class TestLinearProgram:

    def test_default_bounds_are_nonnegative(self):
        program = _program([1, 1], [([1, 1], "<=", 1)], None)
        np.testing.assert_array_equal(program.lower, [0.0, 0.0])
        assert np.isposinf(program.upper).all()

    def test_relation_parsing(self):
        assert Relation.parse("L") is Relation.LE
        assert Relation.parse("==") is Relation.EQ
        with pytest.raises(ValidationError):
            Relation.parse("<")

    def test_row_length_mismatch(self):
        with pytest.raises(DimensionMismatch):
            _program([1, 1], [([1], "<=", 1)], None)

    def test_inconsistent_bounds(self):
        with pytest.raises(ValidationError):
            _program([1], [([1], "<=", 1)], [(2.0, 1.0)])

    def test_non_finite_coefficients(self):
        with pytest.raises(ValidationError):
            _program([np.nan], [([1], "<=", 1)], None)

    def test_default_names(self):
        program = _program([1, 1], [([1, 1], "<=", 1)], None)
        assert program.variable_names() == ("x0", "x1")
        assert program.constraint_names() == ("c0",)

    def test_violation(self):
        program = _program([1, 1], [([1, 1], "<=", 1), ([1, -1], "=", 0)], None)
        assert program.violation(np.array([0.5, 0.5])) == 0.0
        assert program.violation(np.array([1.0, 0.5])) == pytest.approx(0.5)
        assert program.violation(np.array([-0.25, -0.25])) == pytest.approx(0.25)

    def test_solution_to_dict(self):
        solution = _solve(*HAND_LPS["single_bound"][:3])
        document = solution.to_dict()
        assert document["status"] == "Optimal"
        assert document["primal"] == pytest.approx([3.0])


@pytest.mark.unit
class TestBackendSelection:

    def test_auto_prefers_simplex_for_small_programs(self):
        program = _program(*HAND_LPS["textbook_2d"][:3])
        assert select_backend(program, SolverConfig()) == "simplex"
        assert select_backend(program, SolverConfig(dense_limit=0)) == "highs"
        assert dense_cells(program) > 0

    def test_explicit_backend(self):
        program = _program(*HAND_LPS["textbook_2d"][:3])
        assert select_backend(program, SolverConfig(backend="highs")) == "highs"

    def test_unknown_backend(self):
        with pytest.raises(ValidationError):
            SolverConfig(backend="cplex")
