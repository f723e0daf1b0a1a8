"""Quantum Rabi spectrum from the Painleve V tau function."""

__version__ = "0.1.0"
