"""Weak-supervision labeling of wiki edit intent and sentence-quality corpora."""

__version__ = "0.1.0"
