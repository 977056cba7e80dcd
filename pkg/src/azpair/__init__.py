"""Arithmetic dynamics toolkit: heights, Mahler measures and dynamical pairings."""

__version__ = "0.1.0"
