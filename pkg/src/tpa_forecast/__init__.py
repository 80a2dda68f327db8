"""Temporal pattern attention forecasting toolkit."""

__version__ = "0.1.0"
