"""Isoperimetric profiles, capacity criteria and semigroup bounds for
one-dimensional log-concave-type measures and their products."""

__version__ = "0.1.0"
