"""
Command-line front end: fuzz, gen, mutate, min, report and import.
"""

__all__ = []
