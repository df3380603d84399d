"""Exact moments, partition norms and tail bounds for Gaussian chaos polynomials."""

__version__ = "0.1.0"
