"""Fronts in the weakly heterogeneous Allen-Cahn equation."""

__version__ = "0.1.0"
