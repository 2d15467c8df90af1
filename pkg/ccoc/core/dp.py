"""
Finite-Horizon Dynamic Programming

Backward recursions for policy cost, optimal cost, safety, maximal safety,
the lambda-weighted dual recursion and the restricted recursions that pick
the cheapest / safest lambda-optimal policy.

Every recursion goes through `q_values`, so a greedy policy evaluated by
the matching evaluation recursion reproduces the optimal table exactly.
"""

from typing import Tuple, Union

import numpy as np
from loguru import logger

from .augment import AugmentedMdp
from .errors import DimensionMismatch, EmptyActionSet
from .mdp import DetPolicy, FiniteMdp, ValueTable

DEFAULT_EPS_OPT = 1e-7

ModelLike = Union[FiniteMdp, AugmentedMdp]


def as_model(m: ModelLike) -> FiniteMdp:
    return m.model if isinstance(m, AugmentedMdp) else m


def expected_next(transition: np.ndarray, next_values: np.ndarray) -> np.ndarray:
    """E[V(x') | x, a] for every (x, a), fixed summation order per row."""
    n_states, n_actions, _ = transition.shape
    return (transition.reshape(n_states * n_actions, n_states) @ next_values).reshape(
        n_states, n_actions
    )


def q_values(m: ModelLike, next_values: np.ndarray, k: int, with_cost: bool = True) -> np.ndarray:
    """Q_k[x, a] = l_k(x, a) + sum_x' V_{k+1}(x') P(x' | x, a)."""
    model = as_model(m)
    expectation = expected_next(model.transition, next_values)
    if with_cost:
        return model.stage_cost[k] + expectation
    return expectation


def _pick(q: np.ndarray, actions: np.ndarray) -> np.ndarray:
    return q[np.arange(q.shape[0]), actions]


def _check_policy(model: FiniteMdp, pi: DetPolicy) -> None:
    pi.check_for(model.n_states, model.n_actions, model.horizon)


def eval_cost(m: ModelLike, pi: DetPolicy) -> ValueTable:
    """Expected cost-to-go C^pi_k of a deterministic policy."""
    model = as_model(m)
    _check_policy(model, pi)
    values = np.empty((model.horizon + 1, model.n_states))
    values[model.horizon] = model.terminal_cost
    for k in range(model.horizon - 1, -1, -1):
        values[k] = _pick(q_values(model, values[k + 1], k), pi.actions[k])
    return ValueTable(values)


def optimal_cost(m: ModelLike) -> Tuple[ValueTable, DetPolicy]:
    """Minimal expected cost C*_k and a greedy policy (lowest-index ties)."""
    model = as_model(m)
    values = np.empty((model.horizon + 1, model.n_states))
    actions = np.empty((model.horizon, model.n_states), dtype=np.int64)
    values[model.horizon] = model.terminal_cost
    for k in range(model.horizon - 1, -1, -1):
        q = q_values(model, values[k + 1], k)
        actions[k] = np.argmin(q, axis=1)
        values[k] = _pick(q, actions[k])
    return ValueTable(values), DetPolicy(actions)


def eval_safety(am: AugmentedMdp, pi: DetPolicy) -> ValueTable:
    """P^pi(x_{0:N} in H) as E[delta(b_N)] on the augmented chain."""
    _check_policy(am.model, pi)
    values = np.empty((am.horizon + 1, am.n_states))
    values[am.horizon] = am.delta_states
    for k in range(am.horizon - 1, -1, -1):
        values[k] = _pick(q_values(am, values[k + 1], k, with_cost=False), pi.actions[k])
    return ValueTable(values)


def max_safety(am: AugmentedMdp) -> Tuple[ValueTable, DetPolicy]:
    """Maximal safety V*_k and a greedy maximizer (lowest-index ties)."""
    values = np.empty((am.horizon + 1, am.n_states))
    actions = np.empty((am.horizon, am.n_states), dtype=np.int64)
    values[am.horizon] = am.delta_states
    for k in range(am.horizon - 1, -1, -1):
        q = q_values(am, values[k + 1], k, with_cost=False)
        actions[k] = np.argmax(q, axis=1)
        values[k] = _pick(q, actions[k])
    return ValueTable(values), DetPolicy(actions)


def lagrangian_terminal(am: AugmentedMdp, lam: float, alpha: float) -> np.ndarray:
    """J^lambda_N = l_N + lambda (alpha - delta(b_N))."""
    return am.model.terminal_cost + lam * (alpha - am.delta_states)


def greedy_sets(am: AugmentedMdp, table: ValueTable, eps_opt: float = DEFAULT_EPS_OPT) -> np.ndarray:
    """
    Boolean mask U*[k, x~, a] of actions within eps_opt of the Bellman
    minimum computed from J_{k+1} of `table`.
    """
    if table.values.shape != (am.horizon + 1, am.n_states):
        raise DimensionMismatch(
            f"value table shape {table.values.shape} does not match "
            f"{(am.horizon + 1, am.n_states)}"
        )
    mask = np.empty((am.horizon, am.n_states, am.n_actions), dtype=bool)
    for k in range(am.horizon):
        q = q_values(am, table.values[k + 1], k)
        mask[k] = q <= q.min(axis=1, keepdims=True) + eps_opt
    return mask


def dual_dp(
    am: AugmentedMdp, lam: float, alpha: float, eps_opt: float = DEFAULT_EPS_OPT
) -> Tuple[ValueTable, np.ndarray]:
    """
    Lambda-weighted recursion J^lambda_{0:N} with its eps_opt-argmin sets.

    The sets describe the lambda-optimal deterministic policies.
    """
    if lam < 0:
        raise ValueError(f"lambda must be non-negative, got {lam}")
    values = np.empty((am.horizon + 1, am.n_states))
    mask = np.empty((am.horizon, am.n_states, am.n_actions), dtype=bool)
    values[am.horizon] = lagrangian_terminal(am, lam, alpha)
    for k in range(am.horizon - 1, -1, -1):
        q = q_values(am, values[k + 1], k)
        best = q.min(axis=1)
        values[k] = best
        mask[k] = q <= best[:, None] + eps_opt
    return ValueTable(values), mask


def dual_value(am: AugmentedMdp, lam: float, alpha: float) -> float:
    """Dual function f(lambda) = J^lambda_0(x~_0)."""
    table, _ = dual_dp(am, lam, alpha)
    return table.at(0, am.initial_augmented)


def lagrangian_value(am: AugmentedMdp, pi: DetPolicy, lam: float, alpha: float) -> float:
    """cost(pi) + lambda (alpha - safety(pi)) at x~_0."""
    x0 = am.initial_augmented
    return eval_cost(am, pi).at(0, x0) + lam * (alpha - eval_safety(am, pi).at(0, x0))


def _check_sets(am: AugmentedMdp, argmin_sets: np.ndarray) -> None:
    if argmin_sets.shape != (am.horizon, am.n_states, am.n_actions):
        raise DimensionMismatch(
            f"argmin sets shape {argmin_sets.shape} does not match "
            f"{(am.horizon, am.n_states, am.n_actions)}"
        )
    empty = np.argwhere(~argmin_sets.any(axis=2))
    if empty.size:
        k, s = (int(i) for i in empty[0])
        raise EmptyActionSet(f"No admissible action at k={k}, state {s}")


def cheapest_lambda_optimal(am: AugmentedMdp, argmin_sets: np.ndarray) -> Tuple[DetPolicy, float]:
    """Cheapest policy greedy within the admissible sets."""
    _check_sets(am, argmin_sets)
    values = np.empty((am.horizon + 1, am.n_states))
    actions = np.empty((am.horizon, am.n_states), dtype=np.int64)
    values[am.horizon] = am.model.terminal_cost
    for k in range(am.horizon - 1, -1, -1):
        q = q_values(am, values[k + 1], k)
        restricted = np.where(argmin_sets[k], q, np.inf)
        actions[k] = np.argmin(restricted, axis=1)
        values[k] = _pick(q, actions[k])
    cost = float(values[0, am.initial_augmented])
    logger.debug(f"Cheapest restricted policy cost {cost:.6f}")
    return DetPolicy(actions), cost


def safest_lambda_optimal(am: AugmentedMdp, argmin_sets: np.ndarray) -> Tuple[DetPolicy, float]:
    """Safest policy greedy within the admissible sets."""
    _check_sets(am, argmin_sets)
    values = np.empty((am.horizon + 1, am.n_states))
    actions = np.empty((am.horizon, am.n_states), dtype=np.int64)
    values[am.horizon] = am.delta_states
    for k in range(am.horizon - 1, -1, -1):
        q = q_values(am, values[k + 1], k, with_cost=False)
        restricted = np.where(argmin_sets[k], q, -np.inf)
        actions[k] = np.argmax(restricted, axis=1)
        values[k] = _pick(q, actions[k])
    safety = float(values[0, am.initial_augmented])
    logger.debug(f"Safest restricted policy safety {safety:.6f}")
    return DetPolicy(actions), safety


def eval_invariance_base(m: FiniteMdp, safe_set, pi: DetPolicy) -> ValueTable:
    """Multiplicative invariance recursion on the original state space."""
    _check_policy(m, pi)
    indicator = np.zeros(m.n_states)
    indicator[list(safe_set)] = 1.0
    values = np.empty((m.horizon + 1, m.n_states))
    values[m.horizon] = indicator
    for k in range(m.horizon - 1, -1, -1):
        q = expected_next(m.transition, values[k + 1])
        values[k] = indicator * _pick(q, pi.actions[k])
    return ValueTable(values)


def max_invariance_base(m: FiniteMdp, safe_set) -> Tuple[ValueTable, DetPolicy]:
    """Maximal invariance probability on the original state space."""
    indicator = np.zeros(m.n_states)
    indicator[list(safe_set)] = 1.0
    values = np.empty((m.horizon + 1, m.n_states))
    actions = np.empty((m.horizon, m.n_states), dtype=np.int64)
    values[m.horizon] = indicator
    for k in range(m.horizon - 1, -1, -1):
        q = expected_next(m.transition, values[k + 1])
        actions[k] = np.argmax(q, axis=1)
        values[k] = indicator * _pick(q, actions[k])
    return ValueTable(values), DetPolicy(actions)
