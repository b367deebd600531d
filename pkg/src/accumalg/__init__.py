"""Polynomial systems for transition parameters of hypercubic accumulation
models that are compatible with a cross-sectional dataset."""

__version__ = "0.1.0"
