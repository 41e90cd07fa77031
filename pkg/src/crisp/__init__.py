"""Class-prior induced single-positive multi-label learning."""

__version__ = "0.1.0"
