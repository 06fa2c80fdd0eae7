"""Exact invariants and numeric checks for A-type singularities of smooth surfaces."""

__version__ = "0.1.0"
