"""trunclab: extremal truncated sums of multiplicative functions."""

__version__ = "0.1.0"
