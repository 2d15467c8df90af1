"""Tests package for ccoc.

Unit tests cover each module in isolation; integration tests run the
synthesis pipeline, the oracle agreement sweep and the command line.
"""

__all__ = ["conftest", "unit", "integration"]
