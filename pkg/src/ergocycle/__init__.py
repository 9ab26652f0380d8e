"""Ergodic matrix cocycles over Bernoulli shifts and irrational rotations."""

__version__ = "0.1.0"
