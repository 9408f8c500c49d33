"""Geo air-pollution studies portal engine."""

__version__ = "0.1.0"
