"""Maximal leakage and related information-leakage measures on finite alphabets."""

__version__ = "0.1.0"
