"""Adaptive H-EFT variational training laboratory."""

__version__ = "0.1.0"
