"""Package initialization for heavytail."""

__version__ = "0.1.0"
