"""Weighted variational geometry of solid cones with homogeneous densities."""

__version__ = "0.1.0"
