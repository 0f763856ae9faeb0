"""Arithmetic jet spaces, delta calculus and arithmetic Laplacians in exact arithmetic."""

__version__ = "0.1.0"
