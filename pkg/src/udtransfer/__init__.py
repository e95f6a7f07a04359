"""Globally normalized deep-biaffine dependency parsing toolkit."""
__version__ = "0.1.0"
