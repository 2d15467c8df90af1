"""
Gridding of Continuous Stochastic Systems

Partitions a box state space into uniform cells and a box action space
into representative points, then estimates a finite transition kernel by
Monte-Carlo sampling from every (cell center, action) pair. Samples that
leave the state box either land in one absorbing exterior state or are
clamped back onto the box.

Each (cell, action) pair draws from its own generator keyed by
(seed, cell, action), so results do not depend on scheduling.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, Optional, Tuple, Union

import numpy as np
from loguru import logger

from .core.augment import b_values_for
from .core.errors import DimensionMismatch, ValidationError
from .core.mdp import DetPolicy, FiniteMdp, MixedPolicy, SafetySpec, SpecKind

EXTERIOR_MODES = ("absorb", "clamp")
CORNER_SHRINK = 1e-9


# -- regions ---------------------------------------------------------------


class Region:
    """Set of continuous states; `contains` works on (..., d) arrays."""

    def contains(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __or__(self, other: "Region") -> "Region":
        return RegionUnion((self, other))

    def __sub__(self, other: "Region") -> "Region":
        return RegionDifference(self, other)


@dataclass(frozen=True, eq=False)
class BoxRegion(Region):
    """Closed axis-aligned box."""

    lower: Tuple[float, ...]
    upper: Tuple[float, ...]

    def contains(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        lower = np.asarray(self.lower)
        upper = np.asarray(self.upper)
        return np.all((points >= lower) & (points <= upper), axis=-1)

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.upper, self.lower)))


@dataclass(frozen=True, eq=False)
class RegionUnion(Region):
    parts: Tuple[Region, ...]

    def contains(self, points: np.ndarray) -> np.ndarray:
        result = self.parts[0].contains(points)
        for part in self.parts[1:]:
            result = result | part.contains(points)
        return result


@dataclass(frozen=True, eq=False)
class RegionDifference(Region):
    base: Region
    removed: Region

    def contains(self, points: np.ndarray) -> np.ndarray:
        return self.base.contains(points) & ~self.removed.contains(points)


# -- continuous systems ----------------------------------------------------


StepFn = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
NoiseFn = Callable[[np.random.Generator, int], np.ndarray]
StageCostFn = Callable[[np.ndarray, np.ndarray], np.ndarray]
TerminalCostFn = Callable[[np.ndarray], np.ndarray]


def _zero_terminal(points: np.ndarray) -> np.ndarray:
    return np.zeros(np.asarray(points).shape[0])


@dataclass(frozen=True, eq=False)
class ContinuousSystem:
    """
    Stochastic dynamics x' = step(x, u, w) on a box, with a cost model and
    the specification regions.

    `step`, `stage_cost` and `terminal_cost` act on batches: x is (n, d),
    u is (n, m), w is (n, q) as produced by `noise(rng, n)`.
    """

    name: str
    state_box: np.ndarray
    action_box: np.ndarray
    step: StepFn
    noise: NoiseFn
    stage_cost: StageCostFn
    kind: SpecKind
    safe: Optional[Region]
    target: Optional[Region]
    initial_state: np.ndarray
    alpha: float = 0.0
    terminal_cost: TerminalCostFn = _zero_terminal
    action_periodic: Tuple[bool, ...] = ()

    def __post_init__(self):
        state_box = np.asarray(self.state_box, dtype=np.float64)
        action_box = np.asarray(self.action_box, dtype=np.float64)
        if state_box.ndim != 2 or state_box.shape[1] != 2:
            raise DimensionMismatch("state_box must be a (d, 2) array of [lo, hi] rows")
        if action_box.ndim != 2 or action_box.shape[1] != 2:
            raise DimensionMismatch("action_box must be a (m, 2) array of [lo, hi] rows")
        if (state_box[:, 1] <= state_box[:, 0]).any() or (action_box[:, 1] < action_box[:, 0]).any():
            raise ValidationError("box bounds must satisfy lo < hi")
        periodic = tuple(self.action_periodic) or (False,) * action_box.shape[0]
        if len(periodic) != action_box.shape[0]:
            raise DimensionMismatch("one periodicity flag per action dimension required")
        object.__setattr__(self, "state_box", state_box)
        object.__setattr__(self, "action_box", action_box)
        object.__setattr__(self, "action_periodic", periodic)
        object.__setattr__(self, "initial_state", np.asarray(self.initial_state, dtype=np.float64))
        object.__setattr__(self, "kind", SpecKind.parse(self.kind) if isinstance(self.kind, str) else self.kind)

    @property
    def state_dim(self) -> int:
        return self.state_box.shape[0]

    @property
    def action_dim(self) -> int:
        return self.action_box.shape[0]

    def in_box(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        return np.all((points >= self.state_box[:, 0]) & (points <= self.state_box[:, 1]), axis=-1)

    def in_target(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        if self.target is None:
            return np.zeros(points.shape[:-1], dtype=bool)
        return self.target.contains(points) & self.in_box(points)

    def in_safe(self, points: np.ndarray) -> np.ndarray:
        """Membership of A; for reachability A is the complement of T."""
        points = np.asarray(points, dtype=np.float64)
        if self.kind is SpecKind.REACHABILITY:
            return ~self.in_target(points)
        if self.safe is None:
            return self.in_box(points)
        return self.safe.contains(points) & self.in_box(points)


# cell edge of the default 11x11 grid; reach regions sit on edge multiples
UNICYCLE_EDGE = 10.0 / 11.0

UNICYCLE_EXAMPLES: Dict[str, Dict[str, Any]] = {
    "invariance": {"alpha": 0.90, "initial": (5.0, 5.0)},
    "reachability": {"alpha": 0.60, "initial": (1.5, 1.5)},
    "reach_avoid": {"alpha": 0.25, "initial": (1.5, 1.5)},
}


def unicycle(
    example: str = "invariance",
    position_var: Tuple[float, float] = (1.0, 1.0),
    heading_var: float = 0.2,
    alpha: Optional[float] = None,
) -> ContinuousSystem:
    """
    Planar unicycle on [0, 10]^2 with speed u1 in [0, 3] and heading u2 in [0, 2 pi):

        x' = x + u1 [cos v, sin v] + w1,   v = u2 + w2,

    w1 ~ N(0, diag(position_var)), w2 ~ N(0, heading_var). Stage cost is
    the speed u1, terminal cost 0.

    Invariance keeps out of the corner [0, 2] x [8, 10]. Both reach examples
    aim for T = [7e, 10]^2 with e = 10/11; reach-avoid adds a one-cell wall
    [5e, 6e] x [0, 8e] between the start and T.
    """
    kind = SpecKind.parse(example)
    preset = UNICYCLE_EXAMPLES[kind.value]
    position_std = np.sqrt(np.asarray(position_var, dtype=np.float64))
    heading_std = float(np.sqrt(heading_var))

    def step(x: np.ndarray, u: np.ndarray, w: np.ndarray) -> np.ndarray:
        heading = u[:, 1] + w[:, 2]
        velocity = u[:, :1] * np.stack([np.cos(heading), np.sin(heading)], axis=1)
        return x + velocity + w[:, :2]

    def noise(rng: np.random.Generator, n: int) -> np.ndarray:
        draws = rng.standard_normal((n, 3))
        return draws * np.array([position_std[0], position_std[1], heading_std])

    def stage_cost(x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return np.asarray(u, dtype=np.float64)[..., 0]

    edge = UNICYCLE_EDGE
    target = BoxRegion((7 * edge, 7 * edge), (10.0, 10.0))
    if kind is SpecKind.INVARIANCE:
        safe: Optional[Region] = BoxRegion((0.0, 0.0), (10.0, 10.0)) - BoxRegion((0.0, 8.0), (2.0, 10.0))
        target = None
    elif kind is SpecKind.REACHABILITY:
        safe = None
    else:
        obstacle = BoxRegion((5 * edge, 0.0), (6 * edge, 8 * edge))
        safe = BoxRegion((0.0, 0.0), (10.0, 10.0)) - (obstacle | target)

    return ContinuousSystem(
        name=f"unicycle-{kind.value}",
        state_box=np.array([[0.0, 10.0], [0.0, 10.0]]),
        action_box=np.array([[0.0, 3.0], [0.0, 2.0 * np.pi]]),
        step=step,
        noise=noise,
        stage_cost=stage_cost,
        kind=kind,
        safe=safe,
        target=target,
        initial_state=np.array(preset["initial"]),
        alpha=preset["alpha"] if alpha is None else alpha,
        action_periodic=(False, True),
    )


# -- grid geometry ---------------------------------------------------------


@dataclass(frozen=True)
class GridConfig:
    cells: Tuple[int, ...] = (11, 11)
    action_cells: Tuple[int, ...] = (3, 4)
    samples: int = 400
    seed: int = 0
    horizon: int = 15
    exterior: str = "absorb"
    threads: int = 4

    def __post_init__(self):
        if self.samples < 1:
            raise ValidationError("samples per (cell, action) pair must be at least 1")
        if min(self.cells) < 1 or min(self.action_cells) < 1:
            raise ValidationError("every dimension needs at least one cell")
        if self.exterior not in EXTERIOR_MODES:
            raise ValidationError(
                f"Unknown exterior mode: {self.exterior}. Supported: {', '.join(EXTERIOR_MODES)}"
            )
        if self.threads < 1:
            raise ValidationError("threads must be at least 1")


def parse_shape(text: str) -> Tuple[int, ...]:
    """'11x11' -> (11, 11)."""
    try:
        shape = tuple(int(part) for part in text.lower().split("x"))
    except ValueError:
        raise ValidationError(f"Malformed grid shape '{text}', expected e.g. 11x11") from None
    if not shape or min(shape) < 1:
        raise ValidationError(f"Malformed grid shape '{text}'")
    return shape


@dataclass(frozen=True, eq=False)
class GridGeometry:
    """Uniform state cells plus one exterior index; action grid points."""

    state_box: np.ndarray
    cells: Tuple[int, ...]
    action_box: np.ndarray
    action_cells: Tuple[int, ...]
    action_periodic: Tuple[bool, ...]

    def __post_init__(self):
        object.__setattr__(self, "state_box", np.asarray(self.state_box, dtype=np.float64))
        object.__setattr__(self, "action_box", np.asarray(self.action_box, dtype=np.float64))
        object.__setattr__(self, "cells", tuple(int(c) for c in self.cells))
        object.__setattr__(self, "action_cells", tuple(int(c) for c in self.action_cells))
        if len(self.cells) != self.state_box.shape[0]:
            raise DimensionMismatch(
                f"{len(self.cells)} cell counts for a {self.state_box.shape[0]}-d state box"
            )
        if len(self.action_cells) != self.action_box.shape[0]:
            raise DimensionMismatch(
                f"{len(self.action_cells)} action counts for a {self.action_box.shape[0]}-d action box"
            )

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.cells))

    @property
    def exterior(self) -> int:
        return self.n_cells

    @property
    def n_states(self) -> int:
        return self.n_cells + 1

    @property
    def widths(self) -> np.ndarray:
        return (self.state_box[:, 1] - self.state_box[:, 0]) / np.asarray(self.cells)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.widths))

    @property
    def delta(self) -> float:
        """Cell diameter."""
        return float(np.sqrt(np.sum(self.widths**2)))

    def centers(self) -> np.ndarray:
        """(n_cells, d) cell centers in row-major cell order."""
        index = np.stack(np.unravel_index(np.arange(self.n_cells), self.cells), axis=1)
        return self.state_box[:, 0] + (index + 0.5) * self.widths

    def corners(self) -> np.ndarray:
        """(n_cells, 2^d, d) cell corners."""
        index = np.stack(np.unravel_index(np.arange(self.n_cells), self.cells), axis=1)
        offsets = np.array(np.meshgrid(*[[0, 1]] * len(self.cells), indexing="ij")).reshape(
            len(self.cells), -1
        ).T
        lower = self.state_box[:, 0] + index * self.widths
        return lower[:, None, :] + offsets[None, :, :] * self.widths

    def action_points(self) -> np.ndarray:
        """(n_actions, m) representative actions in row-major order."""
        axes = []
        for (lo, hi), count, periodic in zip(self.action_box, self.action_cells, self.action_periodic):
            if periodic:
                axes.append(lo + (hi - lo) * np.arange(count) / count)
            elif count == 1:
                axes.append(np.array([(lo + hi) / 2.0]))
            else:
                axes.append(np.linspace(lo, hi, count))
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([axis.reshape(-1) for axis in mesh], axis=1)

    @property
    def n_actions(self) -> int:
        return int(np.prod(self.action_cells))

    def clamp(self, points: np.ndarray) -> np.ndarray:
        return np.clip(points, self.state_box[:, 0], self.state_box[:, 1])

    def cell_of(self, points: np.ndarray) -> np.ndarray:
        """Cell index of each point; points outside the box map to the exterior index."""
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        lower, upper = self.state_box[:, 0], self.state_box[:, 1]
        outside = np.any((points < lower) | (points > upper) | ~np.isfinite(points), axis=1)
        safe_points = np.where(outside[:, None], lower, points)
        index = np.floor((safe_points - lower) / self.widths).astype(np.int64)
        index = np.clip(index, 0, np.asarray(self.cells) - 1)
        flat = np.ravel_multi_index(tuple(index.T), self.cells)
        return np.where(outside, self.exterior, flat)

    def to_metadata(self) -> Dict[str, Any]:
        return {
            "state_box": self.state_box.tolist(),
            "cells": list(self.cells),
            "action_box": self.action_box.tolist(),
            "action_cells": list(self.action_cells),
            "action_periodic": list(self.action_periodic),
            "delta": self.delta,
        }

    @classmethod
    def from_metadata(cls, data: Dict[str, Any]) -> "GridGeometry":
        return cls(
            state_box=np.asarray(data["state_box"]),
            cells=tuple(data["cells"]),
            action_box=np.asarray(data["action_box"]),
            action_cells=tuple(data["action_cells"]),
            action_periodic=tuple(bool(p) for p in data["action_periodic"]),
        )


@dataclass(frozen=True, eq=False)
class GridModel:
    """A gridded system: geometry, estimated MDP and its specification."""

    geometry: GridGeometry
    mdp: FiniteMdp
    spec: SafetySpec
    samples: int
    seed: int
    exterior_mode: str
    system_name: str = ""
    misaligned: Dict[str, int] = field(default_factory=dict)

    @property
    def exterior(self) -> int:
        return self.geometry.exterior

    def metadata(self) -> Dict[str, Any]:
        data = self.geometry.to_metadata()
        data.update(
            {
                "samples": self.samples,
                "seed": self.seed,
                "exterior": self.exterior_mode,
                "exterior_state": self.exterior,
                "system": self.system_name,
            }
        )
        return data


def _misaligned_cells(geometry: GridGeometry, region: Region) -> int:
    """
    Cells whose corners disagree with the center on membership. Corners are
    pulled a hair towards the center so a boundary on a cell edge is not
    counted as crossing the cells on either side.
    """
    centers = geometry.centers()
    offsets = geometry.corners() - centers[:, None, :]
    corners = region.contains(centers[:, None, :] + offsets * (1.0 - CORNER_SHRINK))
    inside = region.contains(centers)
    return int(np.sum(np.any(corners != inside[:, None], axis=1)))


def _estimate_rows(
    sys: ContinuousSystem,
    geometry: GridGeometry,
    centers: np.ndarray,
    actions: np.ndarray,
    cell: int,
    config: GridConfig,
) -> np.ndarray:
    rows = np.zeros((actions.shape[0], geometry.n_states))
    start = np.broadcast_to(centers[cell], (config.samples, geometry.state_box.shape[0]))
    for i, action in enumerate(actions):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([config.seed, cell, i])))
        noise = sys.noise(rng, config.samples)
        controls = np.broadcast_to(action, (config.samples, actions.shape[1]))
        successors = sys.step(start, controls, noise)
        if config.exterior == "clamp":
            successors = geometry.clamp(successors)
        counts = np.bincount(geometry.cell_of(successors), minlength=geometry.n_states)
        rows[i] = counts / config.samples
    return rows


def discretize(sys: ContinuousSystem, config: Optional[GridConfig] = None) -> GridModel:
    """
    Estimate a FiniteMdp from `sys` by per-pair Monte-Carlo sampling.

    Costs are evaluated at the representatives; A and T are the cells
    whose centers satisfy the region predicates. The exterior state is
    absorbing, costs nothing and lies outside both A and T.
    """
    config = config or GridConfig()
    geometry = GridGeometry(
        state_box=sys.state_box,
        cells=config.cells,
        action_box=sys.action_box,
        action_cells=config.action_cells,
        action_periodic=sys.action_periodic,
    )
    centers = geometry.centers()
    actions = geometry.action_points()
    n_states, n_actions = geometry.n_states, geometry.n_actions
    logger.info(
        f"Gridding {sys.name}: {geometry.n_cells} cells + exterior, {n_actions} actions, "
        f"{config.samples} samples per pair, seed {config.seed}"
    )

    transition = np.zeros((n_states, n_actions, n_states))
    with ThreadPoolExecutor(max_workers=config.threads) as executor:
        blocks = executor.map(
            lambda cell: _estimate_rows(sys, geometry, centers, actions, cell, config),
            range(geometry.n_cells),
        )
        for cell, rows in enumerate(blocks):
            transition[cell] = rows
    transition[geometry.exterior, :, geometry.exterior] = 1.0

    stage = np.zeros((n_states, n_actions))
    for i, action in enumerate(actions):
        stage[: geometry.n_cells, i] = sys.stage_cost(
            centers, np.broadcast_to(action, (geometry.n_cells, actions.shape[1]))
        )
    terminal = np.zeros(n_states)
    terminal[: geometry.n_cells] = sys.terminal_cost(centers)

    target_cells = np.flatnonzero(sys.in_target(centers))
    if sys.kind is SpecKind.REACHABILITY:
        safe_cells = np.setdiff1d(np.arange(n_states), target_cells)
    else:
        safe_cells = np.flatnonzero(sys.in_safe(centers))

    misaligned = {}
    for name, region in (("safe", sys.safe), ("target", sys.target)):
        if region is not None:
            count = _misaligned_cells(geometry, region)
            misaligned[name] = count
            if count:
                logger.warning(
                    f"{count} cells straddle the {name} region boundary; "
                    "classified by their centers"
                )

    initial = int(geometry.cell_of(sys.initial_state)[0])
    mdp = FiniteMdp(
        transition=transition,
        stage_cost=stage,
        terminal_cost=terminal,
        horizon=config.horizon,
        initial_state=initial,
        labels={geometry.exterior: "exterior"},
    )
    spec = SafetySpec(sys.kind, frozenset(safe_cells.tolist()), frozenset(target_cells.tolist()), sys.alpha)
    return GridModel(
        geometry=geometry,
        mdp=mdp,
        spec=spec,
        samples=config.samples,
        seed=config.seed,
        exterior_mode=config.exterior,
        system_name=sys.name,
        misaligned=misaligned,
    )


# -- error bound -------------------------------------------------------------


def grid_error_bound(horizon: int, gamma: float, h_x: float, delta: float) -> float:
    """A-priori bound N * gamma * h_x * Delta on the safety error of a gridded policy."""
    for name, value in (("horizon", horizon), ("gamma", gamma), ("h_x", h_x), ("delta", delta)):
        if value < 0:
            raise ValidationError(f"{name} must be non-negative, got {value}")
    return horizon * gamma * h_x * delta


def tighten_alpha(alpha: float, bound: float) -> float:
    return min(1.0, alpha + bound)


def region_measure(gm: GridModel, cells: Iterable[int]) -> float:
    """Lebesgue measure covered by grid cells; the exterior state has none."""
    unique = {int(c) for c in cells} - {gm.exterior}
    return len(unique) * gm.geometry.cell_volume


def spec_measure(gm: GridModel) -> float:
    """gamma for grid_error_bound: |A|, or |X \\ T| for reachability."""
    if gm.spec.kind is SpecKind.REACHABILITY:
        cells = set(range(gm.geometry.n_cells)) - set(gm.spec.target_set)
    else:
        cells = gm.spec.safe_set
    return region_measure(gm, cells)


# -- lifted controllers ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GridController:
    """
    Applies grid policies to continuous states: the action of the cell
    containing x, read from the augmented policy table at (cell, b).
    """

    geometry: GridGeometry
    tables: np.ndarray
    probabilities: np.ndarray
    b_values: int

    @property
    def horizon(self) -> int:
        return self.tables.shape[1]

    def action_indices(self, k: int, points: np.ndarray, b: np.ndarray, component: np.ndarray) -> np.ndarray:
        cells = self.geometry.cell_of(points)
        augmented = cells * self.b_values + np.asarray(b, dtype=np.int64)
        indices = self.tables[np.asarray(component, dtype=np.int64), k, augmented]
        # exterior convention: action 0
        return np.where(cells == self.geometry.exterior, 0, indices)

    def actions(self, k: int, points: np.ndarray, b: np.ndarray, component: np.ndarray) -> np.ndarray:
        return self.geometry.action_points()[self.action_indices(k, points, b, component)]


def lift_policy(
    geometry: GridGeometry, policy: Union[DetPolicy, MixedPolicy], kind: SpecKind
) -> GridController:
    """Continuous controller from a policy on the augmented grid MDP."""
    mixed = MixedPolicy.pure(policy) if isinstance(policy, DetPolicy) else policy
    b_values = b_values_for(kind)
    expected = geometry.n_states * b_values
    tables = np.stack([p.actions for p in mixed.policies])
    if tables.shape[2] != expected:
        raise DimensionMismatch(
            f"policy covers {tables.shape[2]} augmented states, grid has {expected}"
        )
    return GridController(geometry, tables, mixed.probabilities, b_values)

