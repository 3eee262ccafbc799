"""Numerical laboratory for Ginzburg-Landau stability computations."""

__version__ = "0.1.0"
