"""
CSV exporter for recorded continuous trajectories.
"""

import csv
import io
from typing import Dict

import numpy as np

from .base_exporter import BaseExporter


class TrajectoryCSVExporter(BaseExporter):
    """
    One row per trial and step. The action columns of the final step are
    empty since no action is applied at k = N.
    """

    HEADER = ("trial", "k", "x1", "x2", "b", "action1", "action2", "success")

    def validate(self, payload: Dict[str, np.ndarray]) -> bool:
        if not payload:
            self.add_error("No trajectories recorded")
            return False
        for key in ("positions", "b", "actions", "success"):
            if key not in payload:
                self.add_error(f"Trajectory field '{key}' missing")
                return False
        if payload["positions"].shape[-1] != 2 or payload["actions"].shape[-1] != 2:
            self.add_error("Trajectory CSV supports two state and two action dimensions")
            return False
        return True

    @staticmethod
    def _number(value: float) -> str:
        return "" if np.isnan(value) else repr(float(value))

    def render(self, payload: Dict[str, np.ndarray]) -> str:
        positions, layers = payload["positions"], payload["b"]
        actions, success = payload["actions"], payload["success"]
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(self.HEADER)
        for trial in range(positions.shape[0]):
            flag = int(success[trial])
            for k in range(positions.shape[1]):
                writer.writerow(
                    [
                        trial,
                        k,
                        repr(float(positions[trial, k, 0])),
                        repr(float(positions[trial, k, 1])),
                        int(layers[trial, k]),
                        self._number(actions[trial, k, 0]),
                        self._number(actions[trial, k, 1]),
                        flag,
                    ]
                )
        return buffer.getvalue()
