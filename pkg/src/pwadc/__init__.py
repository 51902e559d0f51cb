"""Convex (DC) decompositions of continuous piecewise-affine functions."""

__version__ = "0.1.0"
