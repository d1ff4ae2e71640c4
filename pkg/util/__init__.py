"""
Utility package for shaderfuzz.

Provides error handling, logging, and common helper functions.
"""

__all__ = []
