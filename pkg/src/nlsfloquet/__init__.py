"""Floquet analysis of the NLS equation on the half-line with t-periodic boundary data."""

__version__ = "0.1.0"
