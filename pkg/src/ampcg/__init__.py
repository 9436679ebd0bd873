"""Separators and structure learning for AMP chain graphs."""

__version__ = "1.0.0"
