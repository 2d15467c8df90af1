"""
Finite MDP and Specification Types

Immutable containers for finite-horizon MDPs, safety specifications,
policies and value tables, together with their validation routines.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple

import numpy as np
from loguru import logger

from .errors import (
    AlphaRangeError,
    DimensionMismatch,
    IndexOutOfRange,
    NegativeCost,
    OverlapError,
    ProbabilityRangeError,
    RowSumError,
    ValidationError,
)

ROW_SUM_TOL = 1e-9
MIXTURE_SUM_TOL = 1e-12


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


class SpecKind(str, Enum):
    """Trajectory specification kinds."""

    INVARIANCE = "invariance"
    REACHABILITY = "reachability"
    REACH_AVOID = "reach_avoid"

    @classmethod
    def parse(cls, value: str) -> "SpecKind":
        normalized = value.strip().lower().replace("-", "_")
        for kind in cls:
            if kind.value == normalized:
                return kind
        raise ValidationError(
            f"Unknown specification kind: {value}. "
            f"Supported: {', '.join(k.value for k in cls)}"
        )


@dataclass(frozen=True, eq=False)
class FiniteMdp:
    """
    Finite-horizon MDP (X, U, T, l_{0:N}) with a fixed initial state.

    A two-dimensional stage cost table is broadcast across all N stages.
    """

    transition: np.ndarray
    stage_cost: np.ndarray
    terminal_cost: np.ndarray
    horizon: int
    initial_state: int
    labels: Mapping[int, str] = field(default_factory=dict)

    def __post_init__(self):
        transition = np.array(self.transition, dtype=np.float64)
        if transition.ndim != 3 or transition.shape[0] != transition.shape[2]:
            raise DimensionMismatch(
                f"transition must have shape (S, A, S), got {transition.shape}"
            )
        n_states, n_actions, _ = transition.shape
        if int(self.horizon) < 1:
            raise ValidationError(f"horizon must be positive, got {self.horizon}")
        horizon = int(self.horizon)

        stage = np.array(self.stage_cost, dtype=np.float64)
        if stage.ndim == 2:
            stage = np.broadcast_to(stage, (horizon,) + stage.shape).copy()
        if stage.shape != (horizon, n_states, n_actions):
            raise DimensionMismatch(
                f"stage_cost must have shape {(horizon, n_states, n_actions)} "
                f"or {(n_states, n_actions)}, got {stage.shape}"
            )
        terminal = np.array(self.terminal_cost, dtype=np.float64).reshape(-1)
        if terminal.shape != (n_states,):
            raise DimensionMismatch(
                f"terminal_cost must have length {n_states}, got {terminal.shape}"
            )

        object.__setattr__(self, "transition", _frozen(transition))
        object.__setattr__(self, "stage_cost", _frozen(stage))
        object.__setattr__(self, "terminal_cost", _frozen(terminal))
        object.__setattr__(self, "horizon", horizon)
        object.__setattr__(self, "initial_state", int(self.initial_state))
        object.__setattr__(
            self, "labels", {int(k): str(v) for k, v in dict(self.labels).items()}
        )

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transition.shape[1]

    def label(self, state: int) -> str:
        return self.labels.get(state, str(state))


@dataclass(frozen=True)
class SafetySpec:
    """Safe set A, target set T and required success probability alpha."""

    kind: SpecKind
    safe_set: FrozenSet[int] = frozenset()
    target_set: FrozenSet[int] = frozenset()
    alpha: float = 0.0

    def __post_init__(self):
        kind = self.kind if isinstance(self.kind, SpecKind) else SpecKind.parse(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "safe_set", frozenset(int(s) for s in self.safe_set))
        object.__setattr__(self, "target_set", frozenset(int(s) for s in self.target_set))
        object.__setattr__(self, "alpha", float(self.alpha))

    def with_alpha(self, alpha: float) -> "SafetySpec":
        return SafetySpec(self.kind, self.safe_set, self.target_set, alpha)

    def safe_mask(self, n_states: int) -> np.ndarray:
        mask = np.zeros(n_states, dtype=bool)
        mask[list(self.safe_set)] = True
        return mask

    def target_mask(self, n_states: int) -> np.ndarray:
        mask = np.zeros(n_states, dtype=bool)
        mask[list(self.target_set)] = True
        return mask


@dataclass(frozen=True, eq=False)
class DetPolicy:
    """Deterministic Markov policy: actions[k, s] for k < N."""

    actions: np.ndarray

    def __post_init__(self):
        actions = np.array(self.actions, dtype=np.int64)
        if actions.ndim != 2:
            raise DimensionMismatch(
                f"policy table must be (N, S), got shape {actions.shape}"
            )
        object.__setattr__(self, "actions", _frozen(actions))

    @property
    def horizon(self) -> int:
        return self.actions.shape[0]

    @property
    def n_states(self) -> int:
        return self.actions.shape[1]

    def __call__(self, k: int, state: int) -> int:
        return int(self.actions[k, state])

    def __eq__(self, other) -> bool:
        return isinstance(other, DetPolicy) and np.array_equal(self.actions, other.actions)

    def __hash__(self) -> int:
        return hash(self.actions.tobytes())

    def to_list(self) -> List[List[int]]:
        return self.actions.tolist()

    def check_for(self, n_states: int, n_actions: int, horizon: int) -> None:
        if self.actions.shape != (horizon, n_states):
            raise DimensionMismatch(
                f"policy shape {self.actions.shape} does not match "
                f"(N={horizon}, S={n_states})"
            )
        if self.actions.size and (self.actions.min() < 0 or self.actions.max() >= n_actions):
            raise IndexOutOfRange(f"policy uses actions outside 0..{n_actions - 1}")


@dataclass(frozen=True, eq=False)
class MixedPolicy:
    """Distribution over deterministic policies, sampled once at k=0."""

    components: Tuple[Tuple[DetPolicy, float], ...]

    def __post_init__(self):
        components = tuple((policy, float(prob)) for policy, prob in self.components)
        if not components:
            raise ValidationError("A mixed policy needs at least one component")
        probabilities = np.array([prob for _, prob in components])
        if (probabilities < 0).any():
            raise ValidationError("Mixture probabilities must be non-negative")
        if abs(probabilities.sum() - 1.0) > MIXTURE_SUM_TOL:
            raise ValidationError(
                f"Mixture probabilities sum to {probabilities.sum()!r}, expected 1"
            )
        object.__setattr__(self, "components", components)

    @classmethod
    def pure(cls, policy: DetPolicy) -> "MixedPolicy":
        return cls(((policy, 1.0),))

    @property
    def policies(self) -> List[DetPolicy]:
        return [policy for policy, _ in self.components]

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([prob for _, prob in self.components])


@dataclass(frozen=True, eq=False)
class ValueTable:
    """Time-indexed value functions V[k, s] for k = 0..N."""

    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DimensionMismatch(f"value table must be (N+1, S), got {values.shape}")
        object.__setattr__(self, "values", _frozen(values))

    @property
    def horizon(self) -> int:
        return self.values.shape[0] - 1

    @property
    def n_states(self) -> int:
        return self.values.shape[1]

    def at(self, k: int, state: int) -> float:
        return float(self.values[k, state])

    def __getitem__(self, k: int) -> np.ndarray:
        return self.values[k]


def validate_mdp(m: FiniteMdp) -> None:
    """
    Check the stochastic-kernel and cost invariants of an MDP.

    Raises:
        ProbabilityRangeError, RowSumError, NegativeCost, IndexOutOfRange
    """
    transition = m.transition
    if not np.isfinite(transition).all() or (transition < 0).any() or (transition > 1).any():
        bad = np.argwhere(~np.isfinite(transition) | (transition < 0) | (transition > 1))[0]
        raise ProbabilityRangeError(
            f"Transition entry {tuple(int(i) for i in bad)} outside [0, 1]"
        )

    sums = transition.sum(axis=2)
    violations = np.argwhere(np.abs(sums - 1.0) > ROW_SUM_TOL)
    if violations.size:
        s, a = (int(i) for i in violations[0])
        raise RowSumError(s, a, float(sums[s, a]))

    for name, costs in (("stage_cost", m.stage_cost), ("terminal_cost", m.terminal_cost)):
        if not np.isfinite(costs).all():
            raise NegativeCost(f"{name} contains non-finite entries")
        if (costs < 0).any():
            raise NegativeCost(f"{name} contains negative entries (min {costs.min()!r})")

    if not 0 <= m.initial_state < m.n_states:
        raise IndexOutOfRange(
            f"initial_state {m.initial_state} outside 0..{m.n_states - 1}"
        )
    for state in m.labels:
        if not 0 <= state < m.n_states:
            raise IndexOutOfRange(f"label for unknown state {state}")


def _check_indices(name: str, states: Iterable[int], n_states: int) -> None:
    for state in states:
        if not 0 <= state < n_states:
            raise IndexOutOfRange(f"{name} contains state {state} outside 0..{n_states - 1}")


def validate_spec(m: FiniteMdp, spec: SafetySpec) -> SafetySpec:
    """
    Validate a specification against a model.

    Returns the normalized specification; for reachability the safe set is
    materialized as the complement of the target set.
    """
    _check_indices("safe_set", spec.safe_set, m.n_states)
    _check_indices("target_set", spec.target_set, m.n_states)
    if not 0.0 <= spec.alpha <= 1.0:
        raise AlphaRangeError(f"alpha must lie in [0, 1], got {spec.alpha}")

    if spec.kind is SpecKind.REACHABILITY:
        complement = frozenset(range(m.n_states)) - spec.target_set
        if spec.safe_set and spec.safe_set != complement:
            overlap = spec.safe_set & spec.target_set
            if overlap:
                raise OverlapError(overlap)
            logger.warning("Reachability safe_set replaced by complement of target_set")
        return SafetySpec(spec.kind, complement, spec.target_set, spec.alpha)

    overlap = spec.safe_set & spec.target_set
    if overlap:
        raise OverlapError(overlap)
    if spec.kind is SpecKind.REACH_AVOID and not spec.target_set:
        logger.warning("Reach-avoid specification with empty target set can never succeed")
    return spec


def uniform_policy(horizon: int, n_states: int, action: int = 0) -> DetPolicy:
    """Policy applying the same action everywhere."""
    return DetPolicy(np.full((horizon, n_states), action, dtype=np.int64))


def labels_from_json(raw: Optional[Dict[str, str]]) -> Dict[int, str]:
    if not raw:
        return {}
    return {int(k): str(v) for k, v in raw.items()}
