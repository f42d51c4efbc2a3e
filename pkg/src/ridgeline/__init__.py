"""Shallow ReLU^k approximation via spherical harmonics, CNN compilation, and rate experiments."""

__version__ = "0.1.0"
