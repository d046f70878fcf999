"""GLLR physical-layer authentication of UAV control packets."""

__version__ = "0.1.0"
