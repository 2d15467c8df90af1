"""Integration tests package for ccoc workflows."""
