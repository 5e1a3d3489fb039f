"""Numerical lab for coupled fourth-order NLS systems."""

__version__ = "0.1.0"
