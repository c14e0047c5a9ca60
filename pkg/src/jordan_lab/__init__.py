"""Numerical laboratory for Anosov automorphisms of T^4 with Jordan blocks."""

__version__ = "0.1.0"
