"""Simulation and exact verification toolkit for dynamic Erdős–Rényi clique complexes."""

__version__ = "0.1.0"
