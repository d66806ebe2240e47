"""Causal-discovery data factory and evaluation harness."""

__version__ = "0.1.0"
