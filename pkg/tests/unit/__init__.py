"""Unit tests package for ccoc components."""
