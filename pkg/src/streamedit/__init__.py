"""Desk-scale real-time streaming video editing stack."""
__version__ = "0.1.0"
