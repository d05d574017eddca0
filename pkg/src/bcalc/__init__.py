"""Workbench for calculus on manifolds with analytic corners."""

__version__ = "0.1.0"
