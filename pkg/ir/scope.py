"""
Statement positions and what is visible at them.

Mutations that insert code or exchange inputs need to know, for a position
in a block, which expression handles may be used there and which control
statements are legal. ``scope_points`` walks a function the same way the
audit does and reports every position (including the one after the last
statement of each block).
"""

from dataclasses import dataclass
from typing import List, Tuple

from ir.module import (
    Function, ALWAYS_VISIBLE, Emit, Call, If, Loop, Switch,
)


@dataclass(frozen=True)
class Flow:
    in_loop: bool = False
    in_switch: bool = False
    in_continuing: bool = False


@dataclass
class ScopePoint:
    """Position `index` in `block`; `visible` holds the usable handles in order."""
    block: list
    index: int
    visible: Tuple[int, ...]
    flow: Flow
    depth: int

    @property
    def statement(self):
        return self.block[self.index] if self.index < len(self.block) else None


def always_visible(function: Function) -> List[int]:
    return [h for h, e in enumerate(function.expressions) if isinstance(e, ALWAYS_VISIBLE)]


def scope_points(function: Function) -> List[ScopePoint]:
    points: List[ScopePoint] = []
    _walk(function.body, always_visible(function), Flow(), 0, points)
    return points


def _walk(block, visible: List[int], flow: Flow, depth: int, points: List[ScopePoint]) -> List[int]:
    for index, stmt in enumerate(block):
        points.append(ScopePoint(block, index, tuple(visible), flow, depth))
        if isinstance(stmt, Emit):
            visible.append(stmt.expr)
        elif isinstance(stmt, Call):
            if stmt.result is not None:
                visible.append(stmt.result)
        elif isinstance(stmt, If):
            _walk(stmt.accept, list(visible), flow, depth + 1, points)
            _walk(stmt.reject, list(visible), flow, depth + 1, points)
        elif isinstance(stmt, Loop):
            _walk(stmt.body, list(visible), Flow(True, False, False), depth + 1, points)
            _walk(stmt.continuing, list(visible), Flow(True, False, True), depth + 1, points)
        elif isinstance(stmt, Switch):
            for case in stmt.cases:
                _walk(case.body, list(visible), Flow(flow.in_loop, True, flow.in_continuing), depth + 1, points)
    points.append(ScopePoint(block, len(block), tuple(visible), flow, depth))
    return visible


def visible_after_continuing(loop: Loop, entry_visible) -> List[int]:
    """Handles a loop's break-if condition may use."""
    visible = list(entry_visible)
    for stmt in loop.continuing:
        if isinstance(stmt, Emit):
            visible.append(stmt.expr)
        elif isinstance(stmt, Call) and stmt.result is not None:
            visible.append(stmt.result)
    return visible
