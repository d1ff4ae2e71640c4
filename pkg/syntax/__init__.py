"""
Grammar-level representation of WGSL.

Parsing to concrete syntax trees, unparsing, the six tree mutations and
subtree-pruning minimization.
"""

__all__ = []
