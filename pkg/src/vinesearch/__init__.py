"""Vine copula structure learning by hold-out random search and model confidence sets."""
__version__ = "0.1.0"
