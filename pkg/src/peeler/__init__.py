"""Streaming ransomware detection over kernel event traces."""

__version__ = "0.1.0"
