"""Finite presheaf models of interval-based synthetic topology."""

__version__ = "0.1.0"
