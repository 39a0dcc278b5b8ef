"""Spin-chain simulation and data-driven Liouvillian extraction."""

__version__ = "0.1.0"
