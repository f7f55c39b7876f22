"""Threshold analysis and wave-operator numerics for Delta^2 + V on R^4."""

__version__ = "0.1.0"
