"""
Systems under test: the bundled instrumented reference validator and the
adapter for external shader translators.
"""

__all__ = []
