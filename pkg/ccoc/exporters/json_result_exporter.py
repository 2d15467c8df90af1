"""
JSON exporter for synthesis results.
"""

import json
from typing import Any, Dict, Union

from .base_exporter import BaseExporter

REQUIRED_KEYS = (
    "kind",
    "alpha",
    "lambda_star",
    "p_v",
    "v_c",
    "v_v",
    "cost_c",
    "cost_v",
    "policies",
)


class JSONResultExporter(BaseExporter):
    """
    Serialize a SynthesisResult (or its dict form) to JSON.

    Schema: kind, alpha, lambda_star, lp1_objective, p_v, v_c, v_v,
    cost_c, cost_v, mixed_cost, mixed_safety, max_safety, safest_cost,
    policies.{pi_c_lambda, pi_v_lambda, pi_c, pi_v} = {cost, safety,
    actions[k][state]}, tables.{lp1, lp2} = J[k][state], diagnostics.
    """

    def __init__(self, indent: int = 2):
        super().__init__()
        self.indent = indent

    @staticmethod
    def _as_dict(payload: Any) -> Dict[str, Any]:
        return payload.to_dict() if hasattr(payload, "to_dict") else payload

    def validate(self, payload: Union[Dict[str, Any], Any]) -> bool:
        document = self._as_dict(payload)
        if not isinstance(document, dict):
            self.add_error("Synthesis result must be a mapping")
            return False
        for key in REQUIRED_KEYS:
            if key not in document:
                self.add_error(f"Mandatory field '{key}' missing from result")
                return False
        if not 0.0 <= float(document["p_v"]) <= 1.0:
            self.add_error(f"p_v={document['p_v']} outside [0, 1]")
            return False
        if document.get("diagnostics", {}).get("lambda_at_cap"):
            self.add_warning("lambda* reached the configured cap")
        return True

    def render(self, payload: Any) -> str:
        document = dict(self._as_dict(payload))
        if self.metadata:
            document["metadata"] = self.metadata
        return json.dumps(document, indent=self.indent)
