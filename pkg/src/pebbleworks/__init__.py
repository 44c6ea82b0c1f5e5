"""Executable tree evaluation, branching program and pebbling constructions."""

__version__ = "0.1.0"
