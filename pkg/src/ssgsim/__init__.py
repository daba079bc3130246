"""Pseudo-spectral solver for the surface semi-geostrophic equations on the torus."""

__version__ = "0.1.0"
