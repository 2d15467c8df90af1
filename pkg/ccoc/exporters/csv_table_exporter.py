"""
CSV exporter for policy summary tables (one row per policy and setting).
"""

import csv
import io
from typing import Any, Dict, List

from .base_exporter import BaseExporter


class CSVTableExporter(BaseExporter):
    """Rows of `policy,setting,cost,safety_pct`; setting is 'discr.' or 'cont.'."""

    HEADER = ("policy", "setting", "cost", "safety_pct")

    def validate(self, payload: List[Dict[str, Any]]) -> bool:
        if not isinstance(payload, list) or not payload:
            self.add_error("Table requires at least 1 row(s)")
            return False
        for i, row in enumerate(payload):
            missing = [key for key in self.HEADER if key not in row]
            if missing:
                self.add_error(f"Row {i} lacks {', '.join(missing)}")
                return False
        return True

    def render(self, payload: List[Dict[str, Any]]) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(self.HEADER)
        for row in payload:
            writer.writerow(
                [row["policy"], row["setting"], f"{row['cost']:.6f}", f"{row['safety_pct']:.6f}"]
            )
        return buffer.getvalue()
