"""Phoneme boundary detection toolkit built around the SuperSeg detector."""

__version__ = "0.3.0"
