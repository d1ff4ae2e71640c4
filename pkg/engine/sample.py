"""
Corpus entries.

A Sample holds exactly one representation, a syntax tree (layer 'ast') or
an IR module (layer 'ir'). Its WGSL text is derived from that
representation and can always be regenerated from it.
"""

from dataclasses import dataclass, field, replace
from typing import FrozenSet, Optional, Union

from ir.lift import lift
from ir.module import IrModule
from syntax.nodes import AstTree
from syntax.parser import ParseFailure, parse
from syntax.unparse import unparse

AST = 'ast'
IR = 'ir'
LAYERS = (AST, IR)

# lineage operator names that are not mutations
ORIGIN_SEED = 'seed'
ORIGIN_GENERATOR = 'generator'
ORIGIN_TWIN = 'twin'


def render(layer: str, payload) -> str:
    """WGSL text of a representation."""
    return unparse(payload) if layer == AST else lift(payload)


@dataclass(eq=False)
class Sample:
    layer: str  # 'ast' | 'ir'; never changes
    payload: Union[AstTree, IrModule]
    source: str = ''
    novel_edges: FrozenSet[int] = frozenset()
    energy: float = 1.0
    parent: Optional[int] = None
    operator: str = ORIGIN_GENERATOR
    exec_time: float = 0.0
    id: int = -1
    flagged: bool = False  # admitted without minimization
    created_exec: int = 0
    created_time: float = 0.0
    name: str = ''  # seed file name, if any
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.layer not in LAYERS:
            raise ValueError(f"unknown sample layer '{self.layer}'")
        if not self.source:
            self.source = render(self.layer, self.payload)

    def size(self) -> int:
        """Node count for trees, expression + statement (+ global) count for modules."""
        if self.layer == AST:
            return self.payload.node_count()
        return self.payload.size()

    def derive(self, payload, operator: str) -> 'Sample':
        """Child sample of the same layer."""
        return Sample(self.layer, payload, parent=self.id, operator=operator, name=self.name)

    def with_payload(self, payload) -> 'Sample':
        """Same sample and lineage with a new representation (minimization)."""
        return replace(self, payload=payload, source=render(self.layer, payload), meta=dict(self.meta))


def twin_of(sample: Sample) -> Optional[Sample]:
    """AST twin of an IR sample: its lifted text, parsed. None for AST samples."""
    if sample.layer != IR:
        return None
    try:
        tree = parse(sample.source)
    except ParseFailure:
        return None
    return Sample(AST, tree, parent=sample.id, operator=ORIGIN_TWIN, name=sample.name,
                  novel_edges=sample.novel_edges)
