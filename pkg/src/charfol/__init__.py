"""Numerical toolkit for characteristic foliations of surfaces in contact 3-manifolds."""

__version__ = "0.1.0"
