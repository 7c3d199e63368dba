"""
Package metadata (version, author, etc).
"""

__all__ = ["__version__", "__author__"]

__version__ = "0.1.0"
__author__ = "bimetro developers"
