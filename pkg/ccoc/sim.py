"""
Monte-Carlo Rollouts

Seeded simulation of mixed policies on the augmented discrete chain and
on continuous systems driven by lifted grid controllers. Every trial owns
a generator keyed by (seed, trial), which draws the mixing choice first
and then all of the trial's noise; trials are then advanced together.
"""

from dataclasses import dataclass
from typing import Any, Dict, List, Optional

import numpy as np
from loguru import logger

from .core.augment import AugmentedMdp, advance_b, initial_b, success_indicator
from .core.errors import ValidationError
from .core.mdp import MixedPolicy
from .grid import ContinuousSystem, GridController

Z_95 = 1.959963984540054
CONSISTENCY_SIGMAS = 4.0


@dataclass(frozen=True, eq=False)
class RolloutReport:
    trials: int
    successes: int
    mean_cost: float
    cost_stderr: float
    component_counts: np.ndarray
    trajectories: Optional[Dict[str, np.ndarray]] = None

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials

    @property
    def half_width(self) -> float:
        """Binomial 95% half-width of success_rate."""
        p = self.success_rate
        return Z_95 * float(np.sqrt(p * (1.0 - p) / self.trials))

    def as_row(self) -> Dict[str, float]:
        return {"cost": self.mean_cost, "safety_pct": 100.0 * self.success_rate}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "trials": self.trials,
            "success_rate": self.success_rate,
            "half_width": self.half_width,
            "mean_cost": self.mean_cost,
            "cost_stderr": self.cost_stderr,
            "component_counts": self.component_counts.tolist(),
        }


def _trial_generators(seed: int, trials: int) -> List[np.random.Generator]:
    if trials < 1:
        raise ValidationError(f"trials must be at least 1, got {trials}")
    return [np.random.default_rng([seed, trial]) for trial in range(trials)]


def _choose_components(probabilities: np.ndarray, draws: np.ndarray) -> np.ndarray:
    cumulative = np.cumsum(probabilities)
    chosen = np.searchsorted(cumulative, draws, side="right")
    return np.minimum(chosen, len(probabilities) - 1)


def _report(
    successes: np.ndarray, costs: np.ndarray, components: np.ndarray, n_components: int, trajectories
) -> RolloutReport:
    trials = successes.shape[0]
    stderr = float(costs.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    return RolloutReport(
        trials=trials,
        successes=int(successes.sum()),
        mean_cost=float(costs.mean()),
        cost_stderr=stderr,
        component_counts=np.bincount(components, minlength=n_components),
        trajectories=trajectories,
    )


def rollout_discrete(
    am: AugmentedMdp, mp: MixedPolicy, trials: int, seed: int, record: bool = False
) -> RolloutReport:
    """
    Simulate the augmented chain under `mp`, mixing once per trial at k = 0.

    With `record`, the augmented state paths (trials, N+1) and chosen
    components are kept on the report.
    """
    generators = _trial_generators(seed, trials)
    horizon = am.horizon
    uniforms = np.stack([rng.random(horizon + 1) for rng in generators])
    components = _choose_components(mp.probabilities, uniforms[:, 0])
    tables = np.stack([p.actions for p in mp.policies])
    for policy in mp.policies:
        policy.check_for(am.n_states, am.n_actions, horizon)

    cdf = np.cumsum(am.model.transition, axis=2)
    cdf /= cdf[..., -1:]
    states = np.full(trials, am.initial_augmented, dtype=np.int64)
    path = np.empty((trials, horizon + 1), dtype=np.int64)
    path[:, 0] = states
    costs = np.zeros(trials)
    for k in range(horizon):
        actions = tables[components, k, states]
        costs += am.model.stage_cost[k, states, actions]
        rows = cdf[states, actions]
        states = np.minimum((rows <= uniforms[:, k + 1, None]).sum(axis=1), am.n_states - 1)
        path[:, k + 1] = states
    costs += am.model.terminal_cost[states]
    successes = am.delta_states[states] > 0.5

    trajectories = {"states": path, "components": components} if record else None
    report = _report(successes, costs, components, len(mp.policies), trajectories)
    logger.info(
        f"Discrete rollouts: {trials} trials, success {report.success_rate:.4f} "
        f"+/- {report.half_width:.4f}, cost {report.mean_cost:.4f}"
    )
    return report


def rollout_continuous(
    sys: ContinuousSystem,
    controller: GridController,
    trials: int,
    seed: int,
    exterior: str = "absorb",
    record: int = 0,
) -> RolloutReport:
    """
    Simulate `sys` under a lifted grid controller, tracking b from the
    continuous regions. Leaving the box freezes the trajectory (absorb)
    or clips it back (clamp); frozen trajectories accrue no further cost.

    `record` keeps the first `record` trajectories (-1 keeps all).
    """
    generators = _trial_generators(seed, trials)
    horizon = controller.horizon
    kind = sys.kind
    draws = [rng.random() for rng in generators]
    noise = np.stack([sys.noise(rng, horizon) for rng in generators])
    components = _choose_components(controller.probabilities, np.asarray(draws))

    x = np.broadcast_to(sys.initial_state, (trials, sys.state_dim)).copy()
    exited = ~sys.in_box(x)
    b = initial_b(kind, sys.in_safe(x), sys.in_target(x))
    costs = np.zeros(trials)

    positions = np.empty((trials, horizon + 1, sys.state_dim))
    layers = np.empty((trials, horizon + 1), dtype=np.int64)
    controls = np.full((trials, horizon + 1, sys.action_dim), np.nan)
    positions[:, 0], layers[:, 0] = x, b

    for k in range(horizon):
        u = controller.actions(k, x, b, components)
        costs += np.where(exited, 0.0, sys.stage_cost(x, u))
        proposed = sys.step(x, u, noise[:, k])
        if exterior == "clamp":
            proposed = np.clip(proposed, sys.state_box[:, 0], sys.state_box[:, 1])
        x = np.where(exited[:, None], x, proposed)
        exited = exited | ~sys.in_box(x)
        b = advance_b(kind, b, sys.in_safe(x), sys.in_target(x))
        positions[:, k + 1], layers[:, k + 1] = x, b
        controls[:, k] = u

    costs += np.where(exited, 0.0, sys.terminal_cost(x))
    successes = success_indicator(kind)[b] > 0.5

    trajectories = None
    if record:
        keep = trials if record < 0 else min(record, trials)
        trajectories = {
            "positions": positions[:keep],
            "b": layers[:keep],
            "actions": controls[:keep],
            "success": successes[:keep],
        }
    report = _report(successes, costs, components, len(controller.probabilities), trajectories)
    logger.info(
        f"Continuous rollouts ({sys.name}): {trials} trials, success "
        f"{report.success_rate:.4f} +/- {report.half_width:.4f}, cost {report.mean_cost:.4f}"
    )
    return report


def check_consistency(report: RolloutReport, exact: float, sigmas: float = CONSISTENCY_SIGMAS) -> bool:
    """
    Whether the empirical success rate lies within `sigmas` binomial
    standard errors of the exact safety; logs a warning otherwise.
    """
    sigma = float(np.sqrt(max(exact * (1.0 - exact), 0.0) / report.trials))
    gap = abs(report.success_rate - exact)
    consistent = gap <= sigmas * sigma + 1e-12
    if not consistent:
        logger.warning(
            f"Empirical success {report.success_rate:.5f} deviates from exact {exact:.5f} "
            f"by {gap / max(sigma, 1e-300):.1f} sigma"
        )
    return consistent
