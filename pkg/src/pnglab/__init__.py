"""Poisson last-passage percolation, the Hammersley process and polynuclear growth."""

__version__ = "0.1.0"
