"""Benchmark suite for static and mobile sensor placement on dynamic heatmaps."""

__version__ = "0.1.0"
