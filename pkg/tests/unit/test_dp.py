"""Unit tests for the finite-horizon recursions."""

import numpy as np
import pytest

from ccoc.core.augment import augment
from ccoc.core.dp import (
    cheapest_lambda_optimal,
    dual_dp,
    dual_value,
    eval_cost,
    eval_invariance_base,
    eval_safety,
    greedy_sets,
    lagrangian_value,
    max_invariance_base,
    max_safety,
    optimal_cost,
    q_values,
    safest_lambda_optimal,
)
from ccoc.core.errors import EmptyActionSet
from ccoc.core.mdp import FiniteMdp, SafetySpec, SpecKind, uniform_policy
from ccoc.oracle import enumerate_policies, evaluate_batch


def _random_am(rng, n_states=2, n_actions=2, horizon=2, kind=SpecKind.INVARIANCE):
    m = FiniteMdp(
        transition=rng.dirichlet(np.ones(n_states), size=(n_states, n_actions)),
        stage_cost=rng.uniform(0.0, 5.0, size=(n_states, n_actions)),
        terminal_cost=rng.uniform(0.0, 2.0, size=n_states),
        horizon=horizon,
        initial_state=0,
    )
    spec = SafetySpec(kind, frozenset({0}), frozenset({1}) if kind is SpecKind.REACH_AVOID else frozenset())
    return augment(m, spec)


def _all_policy_values(am):
    tables = np.stack([pi.actions for pi in enumerate_policies(am)])
    return evaluate_batch(am, tables)


@pytest.mark.unit
class TestCostRecursions:

    def test_two_step_expectation(self, cost_chain):
        table = eval_cost(cost_chain, uniform_policy(2, 2))
        assert table.at(0, 0) == pytest.approx(0.75)
        assert table.at(1, 0) == pytest.approx(0.5)
        np.testing.assert_array_equal(table[2], [0.0, 1.0])

    def test_q_values(self, two_policy_model):
        m, _ = two_policy_model
        q = q_values(m, np.array([0.0, 1.0, 2.0]), 0)
        np.testing.assert_allclose(q, [[1.5, 11.0], [1.0, 1.0], [2.0, 2.0]])
        np.testing.assert_allclose(q_values(m, np.array([0.0, 1.0, 2.0]), 0, with_cost=False)[0], [1.5, 1.0])

    def test_optimal_cost_matches_enumeration(self, rng):
        am = _random_am(rng)
        costs, _ = _all_policy_values(am)
        table, greedy = optimal_cost(am)
        assert table.at(0, am.initial_augmented) == pytest.approx(costs.min(), abs=1e-12)
        assert eval_cost(am, greedy).at(0, am.initial_augmented) == table.at(0, am.initial_augmented)

    def test_time_varying_cost(self):
        m = FiniteMdp(
            transition=np.ones((1, 1, 1)),
            stage_cost=np.array([[[1.0]], [[2.0]], [[4.0]]]),
            terminal_cost=np.array([8.0]),
            horizon=3,
            initial_state=0,
        )
        assert eval_cost(m, uniform_policy(3, 1)).at(0, 0) == 15.0


@pytest.mark.unit
class TestSafetyRecursions:

    def test_survival_probability(self, survival_model):
        m, spec = survival_model
        am = augment(m, spec)
        table = eval_safety(am, uniform_policy(2, am.n_states))
        assert table.at(0, am.encode(0, 1)) == pytest.approx(0.81)
        assert max_safety(am)[0].at(0, am.initial_augmented) == pytest.approx(0.81)

    def test_base_space_invariance_agrees(self, survival_model):
        m, spec = survival_model
        values = eval_invariance_base(m, spec.safe_set, uniform_policy(2, 2))
        assert values.at(0, 0) == pytest.approx(0.81)
        best, _ = max_invariance_base(m, spec.safe_set)
        assert best.at(0, 0) == pytest.approx(0.81)

    def test_max_safety_matches_enumeration(self, rng):
        am = _random_am(rng, kind=SpecKind.REACH_AVOID)
        _, safeties = _all_policy_values(am)
        table, greedy = max_safety(am)
        assert table.at(0, am.initial_augmented) == pytest.approx(safeties.max(), abs=1e-12)
        assert eval_safety(am, greedy).at(0, am.initial_augmented) == table.at(0, am.initial_augmented)

    def test_safety_is_a_probability(self, rng):
        am = _random_am(rng, n_states=3)
        table, _ = max_safety(am)
        assert (table.values >= -1e-12).all()
        assert (table.values <= 1.0 + 1e-12).all()


@pytest.mark.unit
class TestDualRecursion:

    def test_lambda_zero_is_optimal_cost(self, rng):
        am = _random_am(rng)
        table, _ = dual_dp(am, 0.0, 0.5)
        expected, _ = optimal_cost(am)
        np.testing.assert_allclose(table.values, expected.values)

    def test_matches_lagrangian_enumeration(self, rng):
        am = _random_am(rng, kind=SpecKind.REACH_AVOID)
        lam, alpha = 2.0, 0.4
        costs, safeties = _all_policy_values(am)
        expected = (costs + lam * (alpha - safeties)).min()
        assert dual_value(am, lam, alpha) == pytest.approx(expected, abs=1e-12)

    def test_two_policy_crossing(self, two_policy_am):
        assert dual_value(two_policy_am, 20.0, 0.75) == pytest.approx(5.0)
        assert dual_value(two_policy_am, 10.0, 0.75) == pytest.approx(2.5)
        assert dual_value(two_policy_am, 30.0, 0.75) == pytest.approx(2.5)

    def test_negative_lambda_rejected(self, two_policy_am):
        with pytest.raises(ValueError):
            dual_dp(two_policy_am, -1.0, 0.5)

    def test_lipschitz_and_concave(self, rng):
        am = _random_am(rng, n_states=3, kind=SpecKind.REACH_AVOID)
        grid = np.linspace(0.0, 20.0, 200)
        values = np.array([dual_value(am, lam, 0.3) for lam in grid])
        assert (np.abs(np.diff(values)) <= 2.0 * np.diff(grid) + 1e-12).all()
        assert (np.diff(values, 2) <= 1e-9).all()

    def test_greedy_sets_reproduce_dual_sets(self, rng):
        am = _random_am(rng, kind=SpecKind.REACH_AVOID)
        table, sets = dual_dp(am, 3.0, 0.5)
        np.testing.assert_array_equal(greedy_sets(am, table), sets)


@pytest.mark.unit
class TestRestrictedRecursions:

    def test_both_policies_at_crossing(self, two_policy_am):
        am = two_policy_am
        _, sets = dual_dp(am, 20.0, 0.75)
        x0 = am.initial_augmented
        assert sets[0, x0].tolist() == [True, True]

        cheap, cost = cheapest_lambda_optimal(am, sets)
        safe, safety = safest_lambda_optimal(am, sets)
        assert cheap(0, x0) == 0
        assert safe(0, x0) == 1
        assert cost == pytest.approx(0.0)
        assert safety == pytest.approx(1.0)

    def test_extracted_policies_are_lambda_optimal(self, rng):
        am = _random_am(rng, n_states=3, kind=SpecKind.REACH_AVOID)
        lam, alpha = 4.0, 0.5
        _, sets = dual_dp(am, lam, alpha)
        target = dual_value(am, lam, alpha)
        for extract in (cheapest_lambda_optimal, safest_lambda_optimal):
            policy, _ = extract(am, sets)
            assert lagrangian_value(am, policy, lam, alpha) == pytest.approx(target, abs=1e-8)

    def test_empty_action_set(self, two_policy_am):
        sets = np.zeros((1, two_policy_am.n_states, 2), dtype=bool)
        with pytest.raises(EmptyActionSet):
            cheapest_lambda_optimal(two_policy_am, sets)
