"""Exact Klein polygons and polyhedra, their invariants, and Diophantine exponents."""

__version__ = "0.1.0"
