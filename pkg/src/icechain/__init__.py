"""Six-vertex model tools built around circuit-level Glauber dynamics."""

__version__ = "0.1.0"
