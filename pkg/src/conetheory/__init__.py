"""Finite-dimensional numerics for physical theories formulated on convex state cones."""

__version__ = "0.1.0"
