"""Exact correlation-identity checks and hexagonal percolation experiments."""

__version__ = "0.1.0"
