"""Casimir force between a gold sphere and nanostructured silicon."""
__version__ = "0.1.0"
