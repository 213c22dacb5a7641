"""Pulsed spontaneous four-wave mixing with a delayed Raman response."""

__version__ = "0.1.0"
