"""Numerical toolkit for geodesic scattering on asymptotically hyperbolic surfaces."""

__version__ = "0.1.0"
