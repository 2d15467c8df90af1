"""
Model (De)serialization

JSON documents holding a FiniteMdp and its SafetySpec. Floats are written
with repr precision so that load(save(x)) reproduces every numeric field
bit-for-bit.
"""

import json
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
from loguru import logger

from .errors import ParseError
from .mdp import FiniteMdp, SafetySpec, SpecKind, labels_from_json, validate_mdp, validate_spec

REQUIRED_FIELDS = (
    "n_states",
    "n_actions",
    "horizon",
    "transition",
    "stage_cost",
    "terminal_cost",
    "initial_state",
    "spec",
)


def _require(document: Dict[str, Any], key: str, path: str = "") -> Any:
    if key not in document:
        raise ParseError(f"{path}{key}", "missing required field")
    return document[key]


def _as_int(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError(path, f"expected integer, got {type(value).__name__}")
    return value


def _as_array(value: Any, path: str, ndim: Tuple[int, ...]) -> np.ndarray:
    try:
        array = np.array(value, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ParseError(path, f"expected a numeric array ({exc})") from exc
    if array.ndim not in ndim:
        raise ParseError(path, f"expected {' or '.join(map(str, ndim))}-d array, got {array.ndim}-d")
    return array


def _parse_spec(raw: Any) -> SafetySpec:
    if not isinstance(raw, dict):
        raise ParseError("spec", "expected an object")
    kind_raw = _require(raw, "kind", "spec.")
    try:
        kind = SpecKind.parse(str(kind_raw))
    except Exception as exc:
        raise ParseError("spec.kind", str(exc)) from exc
    safe = raw.get("safe_set", [])
    target = raw.get("target_set", [])
    for name, values in (("safe_set", safe), ("target_set", target)):
        if not isinstance(values, list):
            raise ParseError(f"spec.{name}", "expected a list of state indices")
        for i, value in enumerate(values):
            _as_int(value, f"spec.{name}[{i}]")
    alpha = _require(raw, "alpha", "spec.")
    if isinstance(alpha, bool) or not isinstance(alpha, (int, float)):
        raise ParseError("spec.alpha", "expected a number")
    return SafetySpec(kind, frozenset(safe), frozenset(target), float(alpha))


def parse_document(document: Dict[str, Any]) -> Tuple[FiniteMdp, SafetySpec]:
    """Build and validate a model from an already decoded JSON object."""
    if not isinstance(document, dict):
        raise ParseError("$", "top-level value must be an object")
    for key in REQUIRED_FIELDS:
        _require(document, key)

    n_states = _as_int(document["n_states"], "n_states")
    n_actions = _as_int(document["n_actions"], "n_actions")
    horizon = _as_int(document["horizon"], "horizon")
    transition = _as_array(document["transition"], "transition", (3,))
    if transition.shape != (n_states, n_actions, n_states):
        raise ParseError(
            "transition",
            f"shape {transition.shape} does not match ({n_states}, {n_actions}, {n_states})",
        )
    stage_cost = _as_array(document["stage_cost"], "stage_cost", (2, 3))
    terminal_cost = _as_array(document["terminal_cost"], "terminal_cost", (1,))
    initial_state = _as_int(document["initial_state"], "initial_state")

    labels = document.get("labels")
    if labels is not None and not isinstance(labels, dict):
        raise ParseError("labels", "expected an object mapping state index to label")
    try:
        model_labels = labels_from_json(labels)
    except ValueError as exc:
        raise ParseError("labels", str(exc)) from exc

    try:
        model = FiniteMdp(
            transition=transition,
            stage_cost=stage_cost,
            terminal_cost=terminal_cost,
            horizon=horizon,
            initial_state=initial_state,
            labels=model_labels,
        )
    except ValueError as exc:
        raise ParseError("stage_cost", str(exc)) from exc

    spec = _parse_spec(document["spec"])
    validate_mdp(model)
    spec = validate_spec(model, spec)
    logger.debug(
        f"Loaded model: {model.n_states} states, {model.n_actions} actions, "
        f"N={model.horizon}, spec={spec.kind.value}"
    )
    return model, spec


def load_model(text: Union[bytes, str]) -> Tuple[FiniteMdp, SafetySpec]:
    """
    Parse a UTF-8 JSON model document.

    Raises:
        ParseError: malformed JSON or schema violation (with line or field path)
        ValidationError: model or specification invariants violated
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError("$", f"document is not UTF-8 ({exc})") from exc
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError("$", exc.msg, line=exc.lineno) from exc
    return parse_document(document)


def load_metadata(text: Union[bytes, str], block: str = "grid") -> Optional[Dict[str, Any]]:
    """Return an optional metadata block (e.g. grid geometry) of a model document."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError("$", exc.msg, line=exc.lineno) from exc
    return document.get(block)


def model_to_document(
    m: FiniteMdp, spec: SafetySpec, metadata: Optional[Dict[str, Any]] = None
) -> Dict[str, Any]:
    stage = m.stage_cost
    if all(np.array_equal(stage[0], stage[k]) for k in range(1, m.horizon)):
        stage_out = stage[0].tolist()
    else:
        stage_out = stage.tolist()

    document: Dict[str, Any] = {
        "n_states": m.n_states,
        "n_actions": m.n_actions,
        "horizon": m.horizon,
        "transition": m.transition.tolist(),
        "stage_cost": stage_out,
        "terminal_cost": m.terminal_cost.tolist(),
        "initial_state": m.initial_state,
        "spec": {
            "kind": spec.kind.value,
            "safe_set": sorted(spec.safe_set),
            "target_set": sorted(spec.target_set),
            "alpha": spec.alpha,
        },
    }
    if m.labels:
        document["labels"] = {str(k): v for k, v in sorted(m.labels.items())}
    if metadata:
        document["grid"] = metadata
    return document


def save_model(
    m: FiniteMdp, spec: SafetySpec, metadata: Optional[Dict[str, Any]] = None
) -> bytes:
    """Serialize a model to UTF-8 JSON bytes."""
    document = model_to_document(m, spec, metadata)
    return json.dumps(document, indent=1).encode("utf-8")
