"""Pytest configuration and fixtures for ccoc tests.

Provides reusable fixtures for:
- Hand-checkable MDPs with known values (cost chain, 0.9-survival, 2-policy)
- A deterministic continuous system for gridding and rollouts
- Model documents in the JSON schema
- Seeded random generators
- Temporary file/directory management
"""

import json
import shutil
import tempfile

import numpy as np
import pytest
from loguru import logger

from ccoc.core.augment import augment
from ccoc.core.mdp import FiniteMdp, SafetySpec, SpecKind
from ccoc.core.model_io import save_model
from ccoc.grid import BoxRegion, ContinuousSystem, GridConfig


# ===== MODEL FIXTURES =====

@pytest.fixture
def cost_chain():
    """2 states, 1 action, N=2: C_0(0) = 0.5 * 0.5 + 0.5 * 1 = 0.75."""
    transition = np.array([[[0.5, 0.5]], [[0.0, 1.0]]])
    return FiniteMdp(
        transition=transition,
        stage_cost=np.zeros((2, 1)),
        terminal_cost=np.array([0.0, 1.0]),
        horizon=2,
        initial_state=0,
    )


@pytest.fixture
def survival_model():
    """Stay in A={0} with probability 0.9 per step; state 1 absorbing. V_0 = 0.81 at N=2."""
    transition = np.array([[[0.9, 0.1]], [[0.0, 1.0]]])
    m = FiniteMdp(
        transition=transition,
        stage_cost=np.zeros((2, 1)),
        terminal_cost=np.zeros(2),
        horizon=2,
        initial_state=0,
    )
    spec = SafetySpec(SpecKind.INVARIANCE, frozenset({0}), frozenset(), 0.5)
    return m, spec


@pytest.fixture
def two_policy_model():
    """
    From state 0: action 0 is free and stays in A={0, 1} with probability
    0.5, action 1 costs 10 and stays in A surely. N=1, alpha=0.75, so the
    optimal mixture is (0.5, 0.5) with cost 5 and lambda* = 20.
    """
    transition = np.zeros((3, 2, 3))
    transition[0, 0] = [0.0, 0.5, 0.5]
    transition[0, 1] = [0.0, 1.0, 0.0]
    transition[1, :, 1] = 1.0
    transition[2, :, 2] = 1.0
    stage = np.zeros((3, 2))
    stage[0, 1] = 10.0
    m = FiniteMdp(
        transition=transition,
        stage_cost=stage,
        terminal_cost=np.zeros(3),
        horizon=1,
        initial_state=0,
    )
    spec = SafetySpec(SpecKind.INVARIANCE, frozenset({0, 1}), frozenset(), 0.75)
    return m, spec


@pytest.fixture
def two_policy_am(two_policy_model):
    m, spec = two_policy_model
    return augment(m, spec)


@pytest.fixture
def reach_avoid_chain():
    """3-state chain 0 -> 1 -> 2 under action 0, A={0}, T={2}, N=2."""
    transition = np.zeros((3, 1, 3))
    transition[0, 0, 1] = 1.0
    transition[1, 0, 2] = 1.0
    transition[2, 0, 2] = 1.0
    m = FiniteMdp(
        transition=transition,
        stage_cost=np.ones((3, 1)),
        terminal_cost=np.zeros(3),
        horizon=2,
        initial_state=0,
    )
    spec = SafetySpec(SpecKind.REACH_AVOID, frozenset({0}), frozenset({2}), 0.0)
    return m, spec


def _drift_step(x, u, w):
    return x + u[:, :1] + w


def _no_noise(rng, n):
    return np.zeros((n, 1))


def _speed_cost(x, u):
    return np.asarray(u, dtype=np.float64)[..., 0]


@pytest.fixture
def drift_system():
    """
    Noise-free 1-D drift x' = x + u on [0, 4] with u in {0, 1} on a
    two-point action grid; A = [0, 3], start 0.5, stage cost u.
    """
    return ContinuousSystem(
        name="drift",
        state_box=np.array([[0.0, 4.0]]),
        action_box=np.array([[0.0, 1.0]]),
        step=_drift_step,
        noise=_no_noise,
        stage_cost=_speed_cost,
        kind=SpecKind.INVARIANCE,
        safe=BoxRegion((0.0,), (3.0,)),
        target=None,
        initial_state=np.array([0.5]),
        alpha=0.5,
    )


@pytest.fixture
def drift_grid():
    """4 unit cells plus the exterior, actions {0, 1}, N=2."""
    return GridConfig(cells=(4,), action_cells=(2,), samples=3, horizon=2, threads=2)


@pytest.fixture
def minimal_document():
    """Minimal valid model document with two states."""
    return {
        "n_states": 2,
        "n_actions": 1,
        "horizon": 2,
        "transition": [[[0.9, 0.1]], [[0.0, 1.0]]],
        "stage_cost": [[0.0], [0.0]],
        "terminal_cost": [0.0, 0.0],
        "initial_state": 0,
        "spec": {"kind": "invariance", "safe_set": [0], "target_set": [], "alpha": 0.5},
    }


@pytest.fixture
def two_policy_file(temp_directory, two_policy_model):
    """Two-policy model written as a JSON document."""
    m, spec = two_policy_model
    path = temp_directory / "two_policy.json"
    path.write_bytes(save_model(m, spec))
    return path


@pytest.fixture
def infeasible_file(temp_directory, two_policy_model):
    m, _ = two_policy_model
    document = json.loads(save_model(m, SafetySpec(SpecKind.REACH_AVOID, frozenset({0}), frozenset({1}), 0.75)))
    # action 1 reaches T surely; cut it so that max safety is 0.5
    document["transition"][0][1] = [0.0, 0.5, 0.5]
    path = temp_directory / "infeasible.json"
    path.write_text(json.dumps(document), encoding="utf-8")
    return path


# ===== RANDOMNESS FIXTURES =====

@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# ===== FILE AND PATH FIXTURES =====

@pytest.fixture
def temp_directory():
    """Create and cleanup temporary directory for tests."""
    from pathlib import Path

    temp_dir = Path(tempfile.mkdtemp(prefix="ccoc_test_"))
    yield temp_dir
    shutil.rmtree(temp_dir, ignore_errors=True)


@pytest.fixture
def isolated_logging(temp_directory, monkeypatch):
    """Send CLI log files to the temp directory and drop sinks afterwards."""
    from ccoc.config import settings

    monkeypatch.setattr(settings, "LOG_DIR", temp_directory / "logs")
    yield
    logger.remove()


# ===== PYTEST CONFIGURATION =====

def pytest_configure(config):
    """Register custom pytest markers."""
    config.addinivalue_line(
        "markers", "unit: mark test as a unit test"
    )
    config.addinivalue_line(
        "markers", "integration: mark test as an integration test"
    )
    config.addinivalue_line(
        "markers", "slow: mark test as slow running"
    )
