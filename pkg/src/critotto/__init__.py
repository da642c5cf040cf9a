"""Quantum Otto engine with a critical free-fermion working medium."""

__version__ = "0.1.0"
