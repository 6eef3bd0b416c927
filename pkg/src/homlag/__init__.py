"""Reduction, reconstruction and verification toolkit for homogeneous Lagrangian systems."""

__version__ = "0.1.0"
