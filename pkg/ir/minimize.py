"""
IR minimizer.

Reduction strategies, tried in rounds until none makes progress:

* replace the whole module by the minimal fallback module
* remove global variables (after their remaining uses are gone)
* remove helper functions nobody calls
* delete statements, compound ones included
* replace computed expressions by a literal or zero value of the same type

After every accepted step dead expressions, unused locals and unused types
are swept. Every candidate must pass the audit and `keep`, and may not be
larger than the current module.
"""

import dataclasses
from typing import Callable, Dict, List, Optional, Set

from ir.audit import is_well_formed
from ir.module import (
    IrModule, Function, GlobalVariable, LocalVariable, Literal, Compose, CallResult, Emit, Call,
    child_blocks, iter_statements, remap_operands, remap_statement, statement_operands,
    minimal_module,
)
from ir.scope import scope_points
from ir.types import Scalar, Array, Struct, Pointer
from ir.typing import is_constructible


# ============================================================================
# Structural edits (all in place)
# ============================================================================

def _filter_block(block: list, drop) -> None:
    block[:] = [s for s in block if not drop(s)]
    for stmt in block:
        for child in child_blocks(stmt):
            _filter_block(child, drop)


def _live_expressions(function: Function) -> Set[int]:
    stack = []
    for stmt in iter_statements(function.body):
        if not isinstance(stmt, Emit):
            stack.extend(statement_operands(stmt))
    live = set()
    while stack:
        h = stack.pop()
        if h in live:
            continue
        live.add(h)
        stack.extend(function.expressions[h].operands())
    return live


def sweep_function(function: Function) -> None:
    """Drop expressions no statement depends on, their Emits, and unused locals."""
    live = _live_expressions(function)
    _filter_block(function.body, lambda s: isinstance(s, Emit) and s.expr not in live)
    mapping: Dict[int, int] = {}
    kept = []
    for h, expr in enumerate(function.expressions):
        if h in live:
            mapping[h] = len(kept)
            kept.append(expr)
    for expr in kept:
        remap_operands(expr, mapping.__getitem__)
    for stmt in iter_statements(function.body):
        remap_statement(stmt, mapping.__getitem__)
    function.expressions = kept

    used_locals = sorted({e.index for e in kept if isinstance(e, LocalVariable)})
    renumber = {old: new for new, old in enumerate(used_locals)}
    function.locals = [function.locals[i] for i in used_locals]
    for e in kept:
        if isinstance(e, LocalVariable):
            e.index = renumber[e.index]


def _used_types(module: IrModule) -> Set[int]:
    roots = [g.ty for g in module.globals]
    for f in module.functions:
        roots.extend(p.ty for p in f.params)
        roots.extend(v.ty for v in f.locals)
        roots.extend(e.ty for e in f.expressions)
        if f.result is not None:
            roots.append(f.result.ty)
    used = set()
    while roots:
        h = roots.pop()
        if h in used:
            continue
        used.add(h)
        ty = module.types[h]
        if isinstance(ty, Array):
            roots.append(ty.element)
        elif isinstance(ty, Struct):
            roots.extend(m.ty for m in ty.members)
        elif isinstance(ty, Pointer):
            roots.append(ty.pointee)
    return used


def sweep_types(module: IrModule) -> None:
    """Remove unreferenced types; the remaining ones keep their order."""
    used = sorted(_used_types(module))
    mapping = {old: new for new, old in enumerate(used)}
    remap = mapping.__getitem__
    types = []
    for old in used:
        ty = module.types[old]
        if isinstance(ty, Array):
            ty = dataclasses.replace(ty, element=remap(ty.element))
        elif isinstance(ty, Struct):
            ty = dataclasses.replace(ty, members=tuple(dataclasses.replace(m, ty=remap(m.ty))
                                                       for m in ty.members))
        elif isinstance(ty, Pointer):
            ty = dataclasses.replace(ty, pointee=remap(ty.pointee))
        types.append(ty)
    module.types = types
    for g in module.globals:
        g.ty = remap(g.ty)
    for f in module.functions:
        for p in f.params:
            p.ty = remap(p.ty)
        for v in f.locals:
            v.ty = remap(v.ty)
        for e in f.expressions:
            e.ty = remap(e.ty)
        if f.result is not None:
            f.result.ty = remap(f.result.ty)


def without_global(module: IrModule, index: int) -> Optional[IrModule]:
    """Copy without global `index`, or None if something still uses it."""
    out = module.clone()
    for f in out.functions:
        sweep_function(f)
        if any(isinstance(e, GlobalVariable) and e.index == index for e in f.expressions):
            return None
    del out.globals[index]
    for f in out.functions:
        for e in f.expressions:
            if isinstance(e, GlobalVariable) and e.index > index:
                e.index -= 1
    return out


def without_function(module: IrModule, index: int) -> Optional[IrModule]:
    """Copy without helper `index`, or None if it is an entry point or called."""
    if module.functions[index].is_entry_point:
        return None
    for f in module.functions:
        if any(isinstance(s, Call) and s.function == index for s in iter_statements(f.body)):
            return None
    out = module.clone()
    del out.functions[index]
    for f in out.functions:
        for e in f.expressions:
            if isinstance(e, CallResult) and e.function > index:
                e.function -= 1
        for s in iter_statements(f.body):
            if isinstance(s, Call) and s.function > index:
                s.function -= 1
    return out


def without_statement(module: IrModule, fi: int, point: int) -> IrModule:
    out = module.clone()
    p = scope_points(out.functions[fi])[point]
    del p.block[p.index]
    return out


def with_simple_expression(module: IrModule, fi: int, handle: int) -> Optional[IrModule]:
    """Copy where expression `handle` is a zero literal or zero constructor."""
    out = module.clone()
    f = out.functions[fi]
    ty = out.types[f.expressions[handle].ty]
    if isinstance(ty, Pointer) or not is_constructible(out, ty):
        return None
    if isinstance(ty, Scalar):
        zero = {'bool': False, 'i32': 0, 'u32': 0, 'f32': 0.0}[ty.kind]
        f.expressions[handle] = Literal(zero, ty.kind, ty=f.expressions[handle].ty)
        # literals are never emitted
        _filter_block(f.body, lambda s: isinstance(s, Emit) and s.expr == handle)
    else:
        f.expressions[handle] = Compose([], ty=f.expressions[handle].ty)
    return out


def _is_simple(expr) -> bool:
    return isinstance(expr, (Literal, CallResult)) or (isinstance(expr, Compose) and not expr.components)


# ============================================================================
# Driver
# ============================================================================

class _Reducer:

    def __init__(self, module: IrModule, keep: Callable[[IrModule], bool], max_checks: Optional[int]):
        self.current = module.clone()
        self.keep = keep
        self.max_checks = max_checks
        self.checks = 0

    @property
    def exhausted(self) -> bool:
        return self.max_checks is not None and self.checks >= self.max_checks

    def attempt(self, candidate: Optional[IrModule]) -> bool:
        if candidate is None or self.exhausted:
            return False
        if candidate.size() > self.current.size() or not is_well_formed(candidate):
            return False
        self.checks += 1
        if not self.keep(candidate):
            return False
        self.current = candidate
        self.cleanup()
        return True

    def cleanup(self):
        candidate = self.current.clone()
        for f in candidate.functions:
            sweep_function(f)
        sweep_types(candidate)
        if len(candidate.types) == len(self.current.types) and candidate.size() == self.current.size():
            return
        if is_well_formed(candidate) and not self.exhausted:
            self.checks += 1
            if self.keep(candidate):
                self.current = candidate

    # --------------------------------------------------------------

    def drop_globals(self) -> bool:
        progress = False
        for index in reversed(range(len(self.current.globals))):
            if index < len(self.current.globals):
                progress |= self.attempt(without_global(self.current, index))
        return progress

    def drop_functions(self) -> bool:
        progress = False
        for index in reversed(range(len(self.current.functions))):
            if index < len(self.current.functions):
                progress |= self.attempt(without_function(self.current, index))
        return progress

    def delete_statements(self) -> bool:
        progress = False
        for fi in range(len(self.current.functions)):
            point = 0
            while not self.exhausted:
                points = scope_points(self.current.functions[fi])
                # skip block-end positions
                while point < len(points) and points[point].statement is None:
                    point += 1
                if point >= len(points):
                    break
                if self.attempt(without_statement(self.current, fi, point)):
                    progress = True
                else:
                    point += 1
        return progress

    def simplify_expressions(self) -> bool:
        progress = False
        for fi in range(len(self.current.functions)):
            handle = 0
            while handle < len(self.current.functions[fi].expressions) and not self.exhausted:
                expr = self.current.functions[fi].expressions[handle]
                if not _is_simple(expr) and self.attempt(with_simple_expression(self.current, fi, handle)):
                    progress = True
                    # the sweep may have renumbered; restart this function
                    handle = 0
                    continue
                handle += 1
        return progress


def minimize_ir(module: IrModule, keep: Callable[[IrModule], bool],
                max_checks: Optional[int] = None) -> IrModule:
    """Shrink `module` while `keep` stays true.

    Args:
        module: Well-formed module with keep(module) true; not modified
        keep: Predicate the result must satisfy
        max_checks: Optional cap on keep() evaluations

    Returns:
        A well-formed module no larger than the input
    """
    reducer = _Reducer(module, keep, max_checks)
    fallback = minimal_module()
    if fallback.size() < reducer.current.size():
        reducer.attempt(fallback)
    while not reducer.exhausted:
        progress = False
        for strategy in (reducer.drop_globals, reducer.drop_functions,
                         reducer.delete_statements, reducer.simplify_expressions):
            progress |= strategy()
        if not progress:
            break
    return reducer.current
