"""
Brute-Force Oracle

Ground truth for small instances: enumerate deterministic Markov
policies, evaluate each by forward propagation of the state distribution
(independent of the backward recursions), and solve the optimal mixture
as a walk along the lower convex hull of the Pareto front of the
(safety, cost) cloud.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple

import numpy as np
from loguru import logger

from .core.augment import AugmentedMdp, augment, stagewise_reachable
from .core.dp import max_safety
from .core.errors import CapExceeded, InfeasibleError, ValidationError
from .core.mdp import DetPolicy, FiniteMdp, SafetySpec, SpecKind, validate_spec

DEFAULT_CAP = 2_000_000
BATCH = 4096


@dataclass(frozen=True, eq=False)
class OracleResult:
    cost: float
    safety: float
    support: Tuple[DetPolicy, ...]
    probabilities: Tuple[float, ...]
    n_policies: int


def _free_slots(am: AugmentedMdp, reachable_only: bool) -> np.ndarray:
    """(k, s) pairs whose action is enumerated, as a boolean (N, S) mask."""
    if not reachable_only:
        return np.ones((am.horizon, am.n_states), dtype=bool)
    return stagewise_reachable(am)[: am.horizon]


def policy_count(am: AugmentedMdp, reachable_only: bool = False) -> int:
    return am.n_actions ** int(_free_slots(am, reachable_only).sum())


def _policy_batches(
    am: AugmentedMdp, cap: int, reachable_only: bool
) -> Iterator[np.ndarray]:
    slots = _free_slots(am, reachable_only)
    n_free = int(slots.sum())
    count = am.n_actions**n_free
    if count > cap:
        raise CapExceeded(
            f"{am.n_actions}^{n_free} = {count} policies exceed the enumeration cap {cap}"
        )
    flat_slots = np.flatnonzero(slots.reshape(-1))
    powers = am.n_actions ** np.arange(n_free, dtype=np.int64)
    for start in range(0, count, BATCH):
        index = np.arange(start, min(start + BATCH, count), dtype=np.int64)
        digits = (index[:, None] // powers[None, :]) % am.n_actions
        tables = np.zeros((index.shape[0], am.horizon * am.n_states), dtype=np.int64)
        tables[:, flat_slots] = digits
        yield tables.reshape(index.shape[0], am.horizon, am.n_states)


def enumerate_policies(
    am: AugmentedMdp, cap: int = DEFAULT_CAP, reachable_only: bool = False
) -> Iterator[DetPolicy]:
    """
    Every deterministic Markov policy exactly once.

    With `reachable_only`, actions are enumerated only at (k, s) pairs
    reachable from x~_0 and fixed to 0 elsewhere.

    Raises:
        CapExceeded: the policy count exceeds `cap`
    """
    for batch in _policy_batches(am, cap, reachable_only):
        for table in batch:
            yield DetPolicy(table)


def evaluate_batch(am: AugmentedMdp, tables: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(cost, safety) at x~_0 for a batch of policy tables (B, N, S)."""
    batch = tables.shape[0]
    model = am.model
    distribution = np.zeros((batch, am.n_states))
    distribution[:, am.initial_augmented] = 1.0
    costs = np.zeros(batch)
    states = np.arange(am.n_states)
    for k in range(am.horizon):
        actions = tables[:, k, :]
        costs += np.sum(distribution * model.stage_cost[k][states[None, :], actions], axis=1)
        kernels = model.transition[states[None, :], actions]
        distribution = np.einsum("bs,bst->bt", distribution, kernels)
    costs += distribution @ model.terminal_cost
    return costs, distribution @ am.delta_states


def _pareto_front(points: np.ndarray) -> np.ndarray:
    """
    Indices of the (safety, cost) points not dominated by a safer or
    equally safe point of no higher cost, in increasing safety.
    """
    order = np.lexsort((points[:, 1], -points[:, 0]))
    costs = points[order, 1]
    cheapest_so_far = np.concatenate([[np.inf], np.minimum.accumulate(costs)[:-1]])
    return order[costs < cheapest_so_far][::-1]


def _lower_hull(points: np.ndarray, front: np.ndarray) -> List[int]:
    """Lower convex hull of a Pareto front, left to right; collinear points dropped."""
    hull: List[int] = []
    for i in front:
        while len(hull) >= 2:
            o, a = points[hull[-2]], points[hull[-1]]
            cross = (a[0] - o[0]) * (points[i, 1] - o[1]) - (a[1] - o[1]) * (points[i, 0] - o[0])
            if cross > 0.0:
                break
            hull.pop()
        hull.append(int(i))
    return hull


def optimal_mixture(costs: np.ndarray, safeties: np.ndarray, alpha: float) -> Tuple[float, List[int], List[float]]:
    """
    min sum p_i cost_i  s.t.  sum p_i safety_i >= alpha, p in the simplex.

    Returns the optimal cost, the support indices and their probabilities.
    """
    if safeties.max() < alpha:
        raise InfeasibleError(float(safeties.max()), alpha)
    points = np.column_stack([safeties, costs]).astype(np.float64)
    # the front starts at the cheapest point and ends at the safest one
    hull = _lower_hull(points, _pareto_front(points))
    first = hull[0]
    if points[first, 0] >= alpha:
        return float(points[first, 1]), [first], [1.0]

    for left, right in zip(hull, hull[1:]):
        s_left, c_left = points[left]
        s_right, c_right = points[right]
        if s_right >= alpha:
            weight = (alpha - s_left) / (s_right - s_left)
            cost = (1.0 - weight) * c_left + weight * c_right
            return float(cost), [left, right], [1.0 - weight, weight]
    # max safety >= alpha guarantees a crossing edge
    raise InfeasibleError(float(safeties.max()), alpha)


def oracle_optimal_mixed(
    am: AugmentedMdp, alpha: float, cap: int = DEFAULT_CAP
) -> OracleResult:
    """
    Optimal mixed policy by exhaustive enumeration over the (k, s) pairs
    reachable from x~_0.

    Raises:
        InfeasibleError: every policy is below alpha
        CapExceeded: too many policies
    """
    cost_parts, safety_parts, table_parts = [], [], []
    for batch in _policy_batches(am, cap, reachable_only=True):
        costs, safeties = evaluate_batch(am, batch)
        cost_parts.append(costs)
        safety_parts.append(safeties)
        table_parts.append(batch)
    costs = np.concatenate(cost_parts)
    safeties = np.concatenate(safety_parts)
    tables = np.concatenate(table_parts)

    cost, support, probabilities = optimal_mixture(costs, safeties, alpha)
    safety = float(sum(p * safeties[i] for i, p in zip(support, probabilities)))
    logger.debug(
        f"Oracle over {costs.shape[0]} policies: cost {cost:.9f}, safety {safety:.9f}"
    )
    return OracleResult(
        cost=cost,
        safety=safety,
        support=tuple(DetPolicy(tables[i]) for i in support),
        probabilities=tuple(probabilities),
        n_policies=int(costs.shape[0]),
    )


def _random_sets(rng: np.random.Generator, n_states: int, kind: SpecKind, x0: int):
    states = np.arange(n_states)
    if kind is SpecKind.INVARIANCE:
        safe = states[rng.random(n_states) < 0.75]
        return frozenset(set(safe.tolist()) | {x0}), frozenset()
    target = states[rng.random(n_states) < 0.35]
    if target.size == 0:
        target = np.array([rng.integers(n_states)])
    if kind is SpecKind.REACHABILITY:
        return frozenset(), frozenset(target.tolist())
    rest = np.setdiff1d(states, target)
    safe = rest[rng.random(rest.size) < 0.7]
    return frozenset(safe.tolist()), frozenset(target.tolist())


def random_instance(
    rng: np.random.Generator,
    n_states: int,
    n_actions: int,
    horizon: int,
    kind: SpecKind,
    cap: int = DEFAULT_CAP,
    max_tries: int = 1000,
) -> Tuple[FiniteMdp, SafetySpec]:
    """
    Random model with sparse transitions and alpha drawn uniformly in
    [0.05, V* - 0.05]; resampled until feasible and enumerable.
    """
    if n_states < 1 or n_actions < 1 or horizon < 1:
        raise ValidationError("random instances need positive sizes")
    for _ in range(max_tries):
        transition = np.zeros((n_states, n_actions, n_states))
        for s in range(n_states):
            for a in range(n_actions):
                support = rng.choice(n_states, size=rng.integers(1, min(3, n_states) + 1), replace=False)
                transition[s, a, support] = rng.dirichlet(np.ones(support.size))
        # pin exact row sums
        transition /= transition.sum(axis=2, keepdims=True)
        stage = rng.uniform(0.0, 10.0, size=(n_states, n_actions))
        terminal = rng.uniform(0.0, 5.0, size=n_states)
        x0 = int(rng.integers(n_states))
        safe, target = _random_sets(rng, n_states, kind, x0)

        m = FiniteMdp(transition, stage, terminal, horizon, x0)
        spec = validate_spec(m, SafetySpec(kind, safe, target, 0.0))
        am = augment(m, spec)
        top = max_safety(am)[0].at(0, am.initial_augmented)
        if top < 0.1 or policy_count(am, reachable_only=True) > cap:
            continue
        alpha = float(rng.uniform(0.05, top - 0.05))
        return m, spec.with_alpha(alpha)
    raise ValidationError(
        f"no feasible random instance found in {max_tries} tries "
        f"({n_states} states, {n_actions} actions, N={horizon}, {kind.value})"
    )


def agreement_gap(m: FiniteMdp, spec: SafetySpec, result, cap: int = DEFAULT_CAP) -> Tuple[float, float]:
    """
    |synthesized mixed cost - oracle cost| and the safety error
    |mixed safety - max(alpha, v_c)| for one synthesized instance.
    """
    from .synthesis import mixed_cost_safety

    am = augment(m, spec)
    oracle = oracle_optimal_mixed(am, spec.alpha, cap)
    cost, safety = mixed_cost_safety(result)
    return abs(cost - oracle.cost), abs(safety - max(spec.alpha, result.v_c))


def sweep(
    n_states: int,
    n_actions: int,
    horizon: int,
    instances: int,
    seed: int,
    kinds: Optional[Tuple[SpecKind, ...]] = None,
    cfg=None,
    threads: int = 1,
) -> List[dict]:
    """
    Random-instance agreement sweep between synthesis and the oracle.

    Instances are drawn in order from one generator, so the records do not
    depend on `threads`.
    """
    from .synthesis import synthesize

    if threads < 1:
        raise ValidationError(f"threads must be at least 1, got {threads}")
    kinds = kinds or tuple(SpecKind)
    rng = np.random.default_rng(seed)
    drawn = []
    for index in range(instances):
        kind = kinds[index % len(kinds)]
        drawn.append((index, kind) + random_instance(rng, n_states, n_actions, horizon, kind))

    def check(item) -> dict:
        index, kind, m, spec = item
        result = synthesize(m, spec, cfg)
        cost_gap, safety_gap = agreement_gap(m, spec, result)
        return {
            "instance": index,
            "kind": kind.value,
            "alpha": spec.alpha,
            "cost_gap": cost_gap,
            "safety_gap": safety_gap,
        }

    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(check, drawn))
