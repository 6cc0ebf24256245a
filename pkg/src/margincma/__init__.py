"""Margin-corrected CMA-ES optimizers for mixed-integer, integer, and binary
black-box optimization, plus discrete baselines and a benchmark harness."""

__version__ = "0.1.0"
