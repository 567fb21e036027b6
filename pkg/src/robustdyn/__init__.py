"""Adaptive-adversary robust dynamic estimation via private aggregation of oblivious copies."""

__version__ = "0.1.0"
