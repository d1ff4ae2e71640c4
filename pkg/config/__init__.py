"""
Configuration package for shaderfuzz.

Provides system-wide constants and campaign configuration management.
"""

__all__ = []
