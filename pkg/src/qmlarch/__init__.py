"""Hybrid classical-quantum classifiers with free unitary layers and QSD compilation."""

__version__ = "0.1.0"
