"""
Auxiliary-State Augmentation

Product of a FiniteMdp with the specification automaton state b. The
augmented state (x, b) is encoded as x * b_values + b. Invariance uses
b in {0, 1}; reachability and reach-avoid use b in {0, 1, 2} with success
absorbed at b = 2.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from .errors import DimensionMismatch
from .mdp import FiniteMdp, SafetySpec, SpecKind

INVARIANCE_DELTA = np.array([0.0, 1.0])
REACH_AVOID_DELTA = np.array([0.0, 0.0, 1.0])


def b_values_for(kind: SpecKind) -> int:
    return 2 if kind is SpecKind.INVARIANCE else 3


def success_indicator(kind: SpecKind) -> np.ndarray:
    return (INVARIANCE_DELTA if kind is SpecKind.INVARIANCE else REACH_AVOID_DELTA).copy()


def initial_b(kind: SpecKind, in_safe, in_target):
    """b_0 from membership of x_0; works elementwise on arrays."""
    in_safe = np.asarray(in_safe, dtype=np.int64)
    in_target = np.asarray(in_target, dtype=np.int64)
    if kind is SpecKind.INVARIANCE:
        return in_safe
    return in_safe + 2 * in_target


def advance_b(kind: SpecKind, b, in_safe, in_target):
    """b_{k+1} from b_k and membership of x_{k+1}; works elementwise on arrays."""
    b = np.asarray(b, dtype=np.int64)
    in_safe = np.asarray(in_safe, dtype=bool)
    in_target = np.asarray(in_target, dtype=bool)
    if kind is SpecKind.INVARIANCE:
        return np.where(b == 1, in_safe.astype(np.int64), 0)
    succeeded = (b == 2) | ((b == 1) & in_target)
    progressing = (b == 1) & in_safe
    return np.where(succeeded, 2, np.where(progressing, 1, 0))


@dataclass(frozen=True, eq=False)
class AugmentedMdp:
    """
    Augmented system: `model` is the product FiniteMdp over (x, b) states,
    `source` the original MDP. `flagged` marks layers that can never be
    entered (the b = 0 layer for reachability).
    """

    model: FiniteMdp
    source: FiniteMdp
    spec: SafetySpec
    b_values: int
    delta: np.ndarray
    next_b: np.ndarray
    flagged: np.ndarray

    @property
    def initial_augmented(self) -> int:
        return self.model.initial_state

    @property
    def n_states(self) -> int:
        return self.model.n_states

    @property
    def n_actions(self) -> int:
        return self.model.n_actions

    @property
    def horizon(self) -> int:
        return self.model.horizon

    @property
    def delta_states(self) -> np.ndarray:
        """delta(b) evaluated at every augmented state."""
        return np.tile(self.delta, self.source.n_states)

    def encode(self, state: int, b: int) -> int:
        return state * self.b_values + b

    def decode(self, index: int) -> Tuple[int, int]:
        return divmod(int(index), self.b_values)

    def project(self, indices: Sequence[int]) -> np.ndarray:
        """Base-state component of augmented indices."""
        return np.asarray(indices, dtype=np.int64) // self.b_values

    def layer(self, indices) -> np.ndarray:
        return np.asarray(indices, dtype=np.int64) % self.b_values


def augment(m: FiniteMdp, spec: SafetySpec) -> AugmentedMdp:
    """
    Build the product of `m` with the auxiliary specification state.

    Expects a validated model and a spec normalized by validate_spec.
    """
    kind = spec.kind
    n_states, n_actions = m.n_states, m.n_actions
    b_values = b_values_for(kind)
    safe = spec.safe_mask(n_states)
    target = spec.target_mask(n_states)

    next_b = np.stack(
        [advance_b(kind, np.full(n_states, b), safe, target) for b in range(b_values)]
    )

    n_aug = n_states * b_values
    transition = np.zeros((n_aug, n_actions, n_aug))
    sources = np.arange(n_states)
    actions = np.arange(n_actions)
    for b in range(b_values):
        rows = sources * b_values + b
        cols = sources * b_values + next_b[b]
        transition[rows[:, None, None], actions[None, :, None], cols[None, None, :]] = m.transition

    x0 = m.initial_state
    b0 = int(initial_b(kind, safe[x0], target[x0]))
    labels = {
        s * b_values + b: f"{m.label(s)}|b={b}" for s in range(n_states) for b in range(b_values)
    }
    model = FiniteMdp(
        transition=transition,
        stage_cost=np.repeat(m.stage_cost, b_values, axis=1),
        terminal_cost=np.repeat(m.terminal_cost, b_values),
        horizon=m.horizon,
        initial_state=x0 * b_values + b0,
        labels=labels,
    )

    flagged = np.zeros(n_aug, dtype=bool)
    if kind is SpecKind.REACHABILITY:
        flagged[0::b_values] = True

    logger.debug(
        f"Augmented {kind.value}: {n_states} x {b_values} = {n_aug} states, "
        f"x0~=({x0}, {b0})"
    )
    return AugmentedMdp(
        model=model,
        source=m,
        spec=spec,
        b_values=b_values,
        delta=success_indicator(kind),
        next_b=next_b,
        flagged=flagged,
    )


def reachable_mask(am: AugmentedMdp, horizon: Optional[int] = None) -> np.ndarray:
    """Augmented states reachable from x~_0 within `horizon` steps under any actions."""
    support = (am.model.transition > 0).any(axis=1)
    reached = np.zeros(am.n_states, dtype=bool)
    frontier = np.zeros(am.n_states, dtype=bool)
    frontier[am.initial_augmented] = True
    reached |= frontier
    for _ in range(am.horizon if horizon is None else horizon):
        frontier = support[frontier].any(axis=0)
        reached |= frontier
    return reached


def stagewise_reachable(am: AugmentedMdp) -> np.ndarray:
    """reach[k, s]: s reachable from x~_0 in exactly k steps, k = 0..N."""
    support = (am.model.transition > 0).any(axis=1)
    reach = np.zeros((am.horizon + 1, am.n_states), dtype=bool)
    reach[0, am.initial_augmented] = True
    for k in range(am.horizon):
        reach[k + 1] = support[reach[k]].any(axis=0)
    return reach


def trajectory_success(
    spec: SafetySpec, states: Sequence[int], horizon: Optional[int] = None
) -> int:
    """
    Direct trajectory predicate x_{0:N} in H from set membership.

    Independent of the b automaton; serves as the oracle for the
    augmentation equivalence.
    """
    states = [int(s) for s in states]
    if horizon is not None and len(states) != horizon + 1:
        raise DimensionMismatch(
            f"trajectory has {len(states)} states, expected N+1 = {horizon + 1}"
        )
    if not states:
        raise DimensionMismatch("empty trajectory")

    if spec.kind is SpecKind.INVARIANCE:
        return int(all(s in spec.safe_set for s in states))
    if spec.kind is SpecKind.REACHABILITY:
        return int(any(s in spec.target_set for s in states))
    for s in states:
        if s in spec.target_set:
            return 1
        if s not in spec.safe_set:
            return 0
    return 0
