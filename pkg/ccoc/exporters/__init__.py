"""
Exporters Module - ccoc
Write synthesis results, summary tables, trajectories and LPs to files
"""

from .base_exporter import BaseExporter
from .csv_table_exporter import CSVTableExporter
from .json_result_exporter import JSONResultExporter
from .lp_file_exporter import LPFileExporter
from .trajectory_csv_exporter import TrajectoryCSVExporter

__all__ = [
    "BaseExporter",
    "CSVTableExporter",
    "JSONResultExporter",
    "LPFileExporter",
    "TrajectoryCSVExporter",
    "get_exporter",
]


def get_exporter(export_type="json"):
    """
    Factory function to get appropriate exporter instance

    Args:
        export_type (str): 'json', 'table', 'trajectory' or 'lp'

    Returns:
        Exporter instance
    """
    exporters = {
        "json": JSONResultExporter,
        "table": CSVTableExporter,
        "trajectory": TrajectoryCSVExporter,
        "lp": LPFileExporter,
    }

    if export_type not in exporters:
        raise ValueError(
            f"Unknown export type: {export_type}. "
            f"Supported: {', '.join(exporters.keys())}"
        )

    return exporters[export_type]()
