"""Synthetic mixed-type tabular data: per-variable pre-transformations, a
variational autoencoder, and propensity-score utility evaluation."""

__version__ = "0.1.0"
