"""Synthetic radial distribution feeders from street-network data."""

__version__ = "0.1.0"
