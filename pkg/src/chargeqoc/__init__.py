"""Optimal control of two-qubit gates between coupled Cooper-pair boxes."""

__version__ = "0.1.0"
