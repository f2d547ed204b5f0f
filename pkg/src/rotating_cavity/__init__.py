"""Polaritons of atoms and diatomic molecules in a uniformly rotating cavity."""

__version__ = "0.1.0"
