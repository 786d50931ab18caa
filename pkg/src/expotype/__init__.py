"""Exponential type of measures on the line: certificates and diagnostics."""

__version__ = "0.1.0"
