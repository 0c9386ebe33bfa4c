"""View-invariant action style analysis from body-point triplet homographies."""

__version__ = "0.1.0"
