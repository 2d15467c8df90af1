"""Unit tests for the brute-force oracle."""

import numpy as np
import pytest

from ccoc.core.augment import augment
from ccoc.core.dp import max_safety
from ccoc.core.errors import CapExceeded, InfeasibleError, ValidationError
from ccoc.core.mdp import FiniteMdp, SafetySpec, SpecKind
from ccoc.oracle import (
    enumerate_policies,
    evaluate_batch,
    optimal_mixture,
    oracle_optimal_mixed,
    policy_count,
    random_instance,
)


def _single_state(n_actions, horizon, kind):
    m = FiniteMdp(
        transition=np.ones((1, n_actions, 1)),
        stage_cost=np.zeros((1, n_actions)),
        terminal_cost=np.zeros(1),
        horizon=horizon,
        initial_state=0,
    )
    return augment(m, SafetySpec(kind, frozenset({0})))


@pytest.mark.unit
class TestPolicyCount:

    def test_invariance(self):
        assert policy_count(_single_state(2, 1, SpecKind.INVARIANCE)) == 4

    def test_reach_avoid(self):
        assert policy_count(_single_state(2, 2, SpecKind.REACH_AVOID)) == 64

    def test_single_action(self):
        assert policy_count(_single_state(1, 3, SpecKind.REACH_AVOID)) == 1

    def test_reachable_only(self, two_policy_am):
        assert policy_count(two_policy_am) == 2**6
        assert policy_count(two_policy_am, reachable_only=True) == 2


@pytest.mark.unit
class TestEnumeration:

    def test_every_policy_once(self, two_policy_am):
        policies = list(enumerate_policies(two_policy_am))
        assert len(policies) == 64
        assert len(set(policies)) == 64

    def test_reachable_only_fixes_the_rest(self, two_policy_am):
        policies = list(enumerate_policies(two_policy_am, reachable_only=True))
        x0 = two_policy_am.initial_augmented
        assert [p(0, x0) for p in policies] == [0, 1]
        for policy in policies:
            others = np.delete(policy.actions[0], x0)
            assert (others == 0).all()

    def test_cap(self, two_policy_am):
        with pytest.raises(CapExceeded):
            list(enumerate_policies(two_policy_am, cap=10))

    def test_evaluate_batch(self, two_policy_am):
        tables = np.stack([p.actions for p in enumerate_policies(two_policy_am, reachable_only=True)])
        costs, safeties = evaluate_batch(two_policy_am, tables)
        np.testing.assert_allclose(costs, [0.0, 10.0])
        np.testing.assert_allclose(safeties, [0.5, 1.0])


@pytest.mark.unit
class TestOptimalMixture:

    def test_two_points(self):
        cost, support, probabilities = optimal_mixture(np.array([0.0, 10.0]), np.array([0.5, 1.0]), 0.75)
        assert cost == pytest.approx(5.0)
        assert support == [0, 1]
        np.testing.assert_allclose(probabilities, [0.5, 0.5])

    def test_cheapest_is_safe_enough(self):
        cost, support, probabilities = optimal_mixture(np.array([0.0, 10.0]), np.array([0.5, 1.0]), 0.4)
        assert (cost, support, probabilities) == (0.0, [0], [1.0])

    def test_interior_points_are_skipped(self):
        costs = np.array([0.0, 10.0, 4.0, 20.0])
        safeties = np.array([0.5, 1.0, 0.8, 0.9])
        cost, support, _ = optimal_mixture(costs, safeties, 0.75)
        assert cost == pytest.approx(10.0 / 3.0)
        assert support == [0, 2]

    def test_cost_tie_prefers_safer(self):
        cost, support, _ = optimal_mixture(np.array([0.0, 0.0]), np.array([0.3, 0.6]), 0.5)
        assert cost == 0.0
        assert support == [1]

    def test_infeasible(self):
        with pytest.raises(InfeasibleError):
            optimal_mixture(np.array([1.0, 2.0]), np.array([0.5, 0.9]), 0.95)

    def test_safeties_equal_up_to_rounding(self):
        costs = np.array([13.74, 8.70, 17.21])
        safeties = np.array([1.0 - 2.0**-53, 1.0, 1.0])
        cost, support, _ = optimal_mixture(costs, safeties, 0.6)
        assert cost == 8.70
        assert support == [1]

    def test_near_collinear_cheaper_point_is_kept(self):
        costs = np.array([0.0, 5.0 - 1e-9, 10.0])
        safeties = np.array([0.5, 0.75, 1.0])
        cost, support, _ = optimal_mixture(costs, safeties, 0.75)
        assert cost == pytest.approx(5.0 - 1e-9, abs=1e-15)
        assert 1 in support

    def test_matches_pairwise_search(self, rng):
        for _ in range(50):
            costs = np.round(rng.uniform(0.0, 20.0, size=12), 2)
            safeties = rng.choice([0.2, 0.5, 1.0 - 2.0**-53, 1.0], size=12)
            safeties[0] = 1.0
            alpha = float(rng.uniform(0.1, 1.0))
            best = np.inf
            for i in range(12):
                if safeties[i] >= alpha:
                    best = min(best, costs[i])
                for j in range(12):
                    if safeties[i] < alpha <= safeties[j]:
                        w = (alpha - safeties[i]) / (safeties[j] - safeties[i])
                        best = min(best, (1.0 - w) * costs[i] + w * costs[j])
            cost, _, _ = optimal_mixture(costs, safeties, alpha)
            assert cost == pytest.approx(best, abs=1e-9)


@pytest.mark.unit
class TestOracle:

    def test_two_policy_instance(self, two_policy_am):
        result = oracle_optimal_mixed(two_policy_am, 0.75)
        assert result.cost == pytest.approx(5.0)
        assert result.safety == pytest.approx(0.75)
        assert result.n_policies == 2
        assert len(result.support) == 2

    def test_beats_every_feasible_pure_policy(self, rng):
        m, spec = random_instance(rng, 3, 2, 2, SpecKind.REACH_AVOID)
        am = augment(m, spec)
        result = oracle_optimal_mixed(am, spec.alpha)
        tables = np.stack([p.actions for p in enumerate_policies(am, reachable_only=True)])
        costs, safeties = evaluate_batch(am, tables)
        assert costs[safeties >= spec.alpha].min() >= result.cost - 1e-9
        assert result.safety >= spec.alpha - 1e-9


@pytest.mark.unit
class TestRandomInstances:

    @pytest.mark.parametrize("kind", list(SpecKind))
    def test_feasible_alpha(self, rng, kind):
        m, spec = random_instance(rng, 4, 2, 2, kind)
        am = augment(m, spec)
        top = max_safety(am)[0].at(0, am.initial_augmented)
        assert 0.05 <= spec.alpha <= top - 0.05
        np.testing.assert_allclose(m.transition.sum(axis=2), 1.0)

    def test_reachability_safe_set_is_complement(self, rng):
        m, spec = random_instance(rng, 4, 2, 2, SpecKind.REACHABILITY)
        assert spec.safe_set == frozenset(range(4)) - spec.target_set

    def test_invalid_sizes(self, rng):
        with pytest.raises(ValidationError):
            random_instance(rng, 0, 2, 2, SpecKind.INVARIANCE)
