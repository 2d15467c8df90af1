"""
Integration tests: model documents through synthesis, rollouts and the
oracle, and gridded systems through synthesis and lifted controllers.
"""

import numpy as np
import pytest

from ccoc.core.augment import augment, trajectory_success
from ccoc.core.errors import ValidationError
from ccoc.core.mdp import MixedPolicy, SpecKind
from ccoc.core.model_io import load_model
from ccoc.grid import GridConfig, discretize, lift_policy, unicycle
from ccoc.lp import SolverConfig
from ccoc.oracle import agreement_gap, oracle_optimal_mixed, random_instance, sweep
from ccoc.sim import check_consistency, rollout_continuous, rollout_discrete
from ccoc.synthesis import SynthesisConfig, mixed_cost_safety, synthesize


@pytest.mark.integration
class TestModelPipeline:

    def test_document_to_rollouts(self, two_policy_file):
        m, spec = load_model(two_policy_file.read_bytes())
        result = synthesize(m, spec)
        cost, safety = mixed_cost_safety(result)
        assert (cost, safety) == pytest.approx((5.0, 0.75))

        report = rollout_discrete(augment(m, spec), result.mixed, trials=20000, seed=0)
        assert check_consistency(report, safety)
        assert report.mean_cost == pytest.approx(cost, abs=0.25)

    def test_matches_oracle(self, two_policy_model):
        m, spec = two_policy_model
        result = synthesize(m, spec)
        cost_gap, safety_gap = agreement_gap(m, spec, result)
        assert cost_gap <= 1e-9
        assert safety_gap <= 1e-9


@pytest.mark.integration
class TestAugmentationEquivalence:

    @pytest.mark.parametrize("kind", list(SpecKind))
    def test_b_automaton_matches_trajectory_predicate(self, kind):
        rng = np.random.default_rng(2024)
        m, spec = random_instance(rng, 4, 2, 3, kind)
        am = augment(m, spec)
        result = synthesize(m, spec)
        report = rollout_discrete(am, MixedPolicy.pure(result.pi_c.policy), trials=10000, seed=1, record=True)
        paths = report.trajectories["states"]
        for path in paths:
            automaton = int(am.delta_states[path[-1]] > 0.5)
            assert automaton == trajectory_success(spec, am.project(path), horizon=m.horizon)


@pytest.mark.integration
class TestOracleAgreement:

    def test_small_sweep(self):
        records = sweep(3, 2, 2, instances=12, seed=0)
        assert len(records) == 12
        assert {r["kind"] for r in records} == {k.value for k in SpecKind}
        assert max(r["cost_gap"] for r in records) <= 1e-6
        assert max(r["safety_gap"] for r in records) <= 1e-6

    def test_threads_preserve_order(self):
        serial = sweep(3, 2, 2, instances=9, seed=3, threads=1)
        parallel = sweep(3, 2, 2, instances=9, seed=3, threads=3)
        assert parallel == serial
        assert [r["instance"] for r in parallel] == list(range(9))

    def test_zero_threads(self):
        with pytest.raises(ValidationError):
            sweep(3, 2, 2, instances=1, seed=0, threads=0)

    def test_highs_backend(self):
        cfg = SynthesisConfig(solver=SolverConfig(backend="highs"))
        records = sweep(3, 2, 2, instances=6, seed=5, cfg=cfg)
        assert max(r["cost_gap"] for r in records) <= 1e-6

    def test_mixture_is_never_worse_than_oracle(self):
        rng = np.random.default_rng(99)
        for kind in SpecKind:
            m, spec = random_instance(rng, 3, 3, 2, kind)
            result = synthesize(m, spec)
            oracle = oracle_optimal_mixed(augment(m, spec), spec.alpha)
            cost, safety = mixed_cost_safety(result)
            assert cost == pytest.approx(oracle.cost, abs=1e-6)
            assert safety >= spec.alpha - 1e-9

    @pytest.mark.slow
    def test_full_sweep(self):
        records = sweep(3, 2, 2, instances=200, seed=1)
        assert max(r["cost_gap"] for r in records) <= 1e-6
        assert max(r["safety_gap"] for r in records) <= 1e-6


@pytest.mark.integration
class TestGriddedPipeline:

    def test_deterministic_drift(self, drift_system, drift_grid):
        gm = discretize(drift_system, drift_grid)
        result = synthesize(gm.mdp, gm.spec)
        controller = lift_policy(gm.geometry, result.mixed, drift_system.kind)
        report = rollout_continuous(drift_system, controller, trials=20, seed=0)
        cost, safety = mixed_cost_safety(result)
        # noise-free dynamics through cell centers: grid and continuous agree
        assert report.success_rate == pytest.approx(safety)
        assert report.mean_cost == pytest.approx(cost)

    def test_unicycle_invariance(self):
        system = unicycle("invariance", alpha=0.5)
        config = GridConfig(cells=(5, 5), action_cells=(3, 4), samples=30, horizon=4, seed=2)
        gm = discretize(system, config)
        result = synthesize(gm.mdp, gm.spec, SynthesisConfig(solver=SolverConfig(backend="highs")))
        cost, safety = mixed_cost_safety(result)
        assert safety >= 0.5 - 1e-9
        assert cost <= result.safest_cost + 1e-6

        report = rollout_discrete(augment(gm.mdp, gm.spec), result.mixed, trials=5000, seed=3)
        assert check_consistency(report, safety)

        controller = lift_policy(gm.geometry, result.mixed, system.kind)
        continuous = rollout_continuous(system, controller, trials=500, seed=3, record=-1)
        assert 0.0 <= continuous.success_rate <= 1.0
        assert continuous.trajectories["positions"].shape == (500, 5, 2)

    @pytest.mark.slow
    @pytest.mark.parametrize("example", ["invariance", "reachability", "reach_avoid"])
    def test_full_scale_examples(self, example):
        system = unicycle(example)
        gm = discretize(system, GridConfig(seed=1))
        result = synthesize(gm.mdp, gm.spec)
        cost, safety = mixed_cost_safety(result)
        assert result.max_safety >= system.alpha
        assert result.v_c < system.alpha
        assert safety == pytest.approx(system.alpha, abs=1e-6)
        assert cost == pytest.approx(result.p_v * result.cost_v + (1.0 - result.p_v) * result.cost_c, abs=1e-9)

        controller = lift_policy(gm.geometry, result.mixed, system.kind)
        continuous = rollout_continuous(system, controller, trials=10_000, seed=1)
        assert continuous.success_rate == pytest.approx(system.alpha, abs=0.08)
