"""
Base Exporter Class for ccoc

Abstract base class defining interface for all exporters
"""

from abc import ABC, abstractmethod
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from loguru import logger


class BaseExporter(ABC):
    """
    Abstract base class for export implementations

    All exporters must implement:
    - render(): Convert a payload to the target text format
    - validate(): Check payload validity
    """

    def __init__(self):
        self.metadata: Dict[str, Any] = {}
        self.errors: List[str] = []
        self.warnings: List[str] = []

    @abstractmethod
    def render(self, payload: Any) -> str:
        """
        Convert a payload to the exporter's text format

        Args:
            payload: Object to export (result, rows, program, ...)

        Returns:
            str: Rendered document
        """

    @abstractmethod
    def validate(self, payload: Any) -> bool:
        """
        Validate a payload before export

        Returns:
            bool: True if valid, False otherwise (errors recorded)
        """

    def export(self, payload: Any, output_path: Optional[Union[str, Path]] = None) -> str:
        """
        Validate, render and optionally write a payload

        Returns:
            str: Rendered document, or "" when validation failed
        """
        self.clear_messages()
        if not self.validate(payload):
            logger.error(f"{type(self).__name__}: payload rejected: {'; '.join(self.errors)}")
            return ""
        content = self.render(payload)
        if output_path is not None:
            path = Path(output_path)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(content, encoding="utf-8")
            self.metadata["output_path"] = str(path)
            logger.info(f"Wrote {path}")
        return content

    def set_metadata(self, **kwargs):
        """Set metadata for export (source model, seed, ...)"""
        self.metadata = {
            "export_time": datetime.now().isoformat(),
            **kwargs,
        }

    def add_error(self, error: str):
        """Add export error message"""
        self.errors.append(error)

    def add_warning(self, warning: str):
        """Add export warning message"""
        self.warnings.append(warning)

    def get_errors(self) -> List[str]:
        return self.errors

    def get_warnings(self) -> List[str]:
        return self.warnings

    def clear_messages(self):
        self.errors = []
        self.warnings = []

    def get_export_info(self) -> Dict[str, Any]:
        """
        Get export information and status

        Returns:
            dict: Status, errors, warnings, metadata
        """
        return {
            "success": len(self.errors) == 0,
            "errors": self.errors,
            "warnings": self.warnings,
            "metadata": self.metadata,
            "timestamp": datetime.now().isoformat(),
        }
