"""Fractional-delay pulse shaping for conditioning MIMO channels."""
__version__ = "0.1.0"
