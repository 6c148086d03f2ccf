"""Reaction-diffusion patterns on networks with CTRW Laplacians."""

__version__ = "0.1.0"
