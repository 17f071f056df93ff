"""Flyable-area planning for directional-antenna UAV links sharing spectrum with WLAN."""

__version__ = "0.1.0"
