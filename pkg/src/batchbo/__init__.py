"""Batch Bayesian optimization benchmark on noisy 6D Ackley and Hartmann."""

__version__ = "0.1.0"
