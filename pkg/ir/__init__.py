"""
Statically-typed shader IR.

Module model and type rules, the audit of structural invariants, random
program generation, the six IR mutations, IR minimization, lifting to WGSL
text and raising WGSL syntax trees back into the IR.
"""

__all__ = []
