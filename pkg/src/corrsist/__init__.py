"""Persistency of (genuine) entanglement, steering and nonlocality under particle loss."""

__version__ = "0.1.0"
