"""Exact and simulated equilibrium statistics for 2-D spatially dependent Parrondo games."""

__version__ = "0.1.0"
