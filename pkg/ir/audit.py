"""
Full-module audit: handle hygiene, typing and structural invariants.

``audit_module`` returns a list of problems (empty for a well-formed
module); ``check_module`` raises on the first one. Every generator,
mutator and minimizer result passes through here before it is used.
"""

from typing import List, Set

from ir.module import (
    IrModule, Function, IrTypeError, IrValidationError, ALWAYS_VISIBLE,
    CallResult, GlobalVariable, iter_statements,
    Emit, Store, Call, If, Loop, Break, Continue, Return, Switch,
)
from ir.types import Scalar, Vector, Matrix, Array, Struct, Pointer, BOOL, I32, U32, F32, scalar_of
from ir.typing import infer_type, is_constructible, is_host_shareable, literal_in_range

STAGES = ('compute', 'vertex', 'fragment')

# builtin IO value -> (type, stages where it is an input, stages where it is an output)
BUILTIN_IO = {
    'position': (Vector(4, F32), ('fragment',), ('vertex',)),
    'vertex_index': (U32, ('vertex',), ()),
    'instance_index': (U32, ('vertex',), ()),
    'front_facing': (BOOL, ('fragment',), ()),
    'sample_index': (U32, ('fragment',), ()),
    'frag_depth': (F32, (), ('fragment',)),
    'global_invocation_id': (Vector(3, U32), ('compute',), ()),
    'local_invocation_id': (Vector(3, U32), ('compute',), ()),
    'workgroup_id': (Vector(3, U32), ('compute',), ()),
    'num_workgroups': (Vector(3, U32), ('compute',), ()),
    'local_invocation_index': (U32, ('compute',), ()),
}


class _Walk:
    """Statement walk state of one function."""

    def __init__(self, module: IrModule, index: int, problems: List[str]):
        self.module = module
        self.index = index
        self.function = module.functions[index]
        self.problems = problems
        self.emitted: Set[int] = set()
        self.defined_results: Set[int] = set()

    def problem(self, message: str):
        self.problems.append(f"{self.function.name}: {message}")

    def ty(self, handle: int):
        return self.module.types[self.function.expressions[handle].ty]

    def check_visible(self, handle: int, visible: Set[int], what: str) -> bool:
        if not 0 <= handle < len(self.function.expressions):
            self.problem(f"{what} uses dangling handle [{handle}]")
            return False
        if handle not in visible:
            self.problem(f"{what} uses [{handle}] before it is emitted")
            return False
        return True

    def block(self, statements, visible: Set[int], in_loop: bool, in_switch: bool,
              in_continuing: bool) -> Set[int]:
        for stmt in statements:
            if isinstance(stmt, Emit):
                h = stmt.expr
                if not 0 <= h < len(self.function.expressions):
                    self.problem(f"emit of dangling handle [{h}]")
                    continue
                expr = self.function.expressions[h]
                if isinstance(expr, ALWAYS_VISIBLE) or isinstance(expr, CallResult):
                    self.problem(f"emit of [{h}], which is never emitted")
                    continue
                if h in self.emitted:
                    self.problem(f"[{h}] emitted twice")
                    continue
                for op in expr.operands():
                    self.check_visible(op, visible, f"[{h}]")
                self.emitted.add(h)
                visible.add(h)
            elif isinstance(stmt, Store):
                ok = self.check_visible(stmt.pointer, visible, "store")
                ok = self.check_visible(stmt.value, visible, "store") and ok
                if ok:
                    pointer = self.ty(stmt.pointer)
                    if not isinstance(pointer, Pointer):
                        self.problem(f"store through non-pointer [{stmt.pointer}]")
                    elif self.module.types[pointer.pointee] != self.ty(stmt.value):
                        self.problem(f"store of [{stmt.value}] does not match the pointee type")
                    elif not is_constructible(self.module, self.module.types[pointer.pointee]):
                        self.problem("store of a non-constructible type")
            elif isinstance(stmt, Call):
                self.call(stmt, visible)
            elif isinstance(stmt, If):
                if self.check_visible(stmt.condition, visible, "if") and self.ty(stmt.condition) != BOOL:
                    self.problem("if condition is not bool")
                self.block(stmt.accept, set(visible), in_loop, in_switch, in_continuing)
                self.block(stmt.reject, set(visible), in_loop, in_switch, in_continuing)
            elif isinstance(stmt, Loop):
                if in_continuing:
                    self.problem("loop inside a continuing block")
                self.block(stmt.body, set(visible), True, False, False)
                after = self.block(stmt.continuing, set(visible), True, False, True)
                if stmt.break_if is not None:
                    if self.check_visible(stmt.break_if, after, "break if") and self.ty(stmt.break_if) != BOOL:
                        self.problem("break-if condition is not bool")
            elif isinstance(stmt, Break):
                if in_continuing:
                    self.problem("break inside a continuing block")
                elif not (in_loop or in_switch):
                    self.problem("break outside of a loop or switch")
            elif isinstance(stmt, Continue):
                if in_continuing or not in_loop:
                    self.problem("continue outside of a loop body")
            elif isinstance(stmt, Return):
                self.ret(stmt, visible, in_continuing)
            elif isinstance(stmt, Switch):
                self.switch(stmt, visible, in_loop, in_continuing)
            else:
                self.problem(f"unknown statement {type(stmt).__name__}")
        return visible

    def call(self, stmt: Call, visible: Set[int]):
        if not 0 <= stmt.function < self.index:
            self.problem(f"call of function {stmt.function} breaks the call order")
            return
        callee = self.module.functions[stmt.function]
        if callee.is_entry_point:
            self.problem(f"call of entry point {callee.name}")
            return
        if len(stmt.arguments) != len(callee.params):
            self.problem(f"call of {callee.name} with {len(stmt.arguments)} arguments")
            return
        for arg, param in zip(stmt.arguments, callee.params):
            if self.check_visible(arg, visible, f"call of {callee.name}"):
                if self.ty(arg) != self.module.types[param.ty]:
                    self.problem(f"argument [{arg}] of {callee.name} has the wrong type")
        if callee.result is None:
            if stmt.result is not None:
                self.problem(f"void call of {callee.name} with a result")
            return
        h = stmt.result
        if h is None or not 0 <= h < len(self.function.expressions):
            self.problem(f"call of {callee.name} without a result expression")
            return
        expr = self.function.expressions[h]
        if not isinstance(expr, CallResult) or expr.function != stmt.function:
            self.problem(f"result [{h}] is not a CallResult of {callee.name}")
            return
        if h in self.defined_results:
            self.problem(f"call result [{h}] defined twice")
            return
        if any(a >= h for a in stmt.arguments):
            self.problem(f"call result [{h}] precedes its arguments")
        self.defined_results.add(h)
        visible.add(h)

    def ret(self, stmt: Return, visible: Set[int], in_continuing: bool):
        if in_continuing:
            self.problem("return inside a continuing block")
        result = self.function.result
        if stmt.value is None:
            if result is not None:
                self.problem("return without a value in a non-void function")
            return
        if result is None:
            self.problem("return with a value in a void function")
            return
        if self.check_visible(stmt.value, visible, "return"):
            if self.ty(stmt.value) != self.module.types[result.ty]:
                self.problem("return value has the wrong type")

    def switch(self, stmt: Switch, visible: Set[int], in_loop: bool, in_continuing: bool):
        if self.check_visible(stmt.selector, visible, "switch"):
            selector = self.ty(stmt.selector)
            if selector not in (I32, U32):
                self.problem("switch selector is not i32 or u32")
            else:
                seen = set()
                for case in stmt.cases:
                    for value in case.values:
                        if not literal_in_range(value, selector.kind):
                            self.problem(f"case value {value} does not fit {selector.kind}")
                        if value in seen:
                            self.problem(f"duplicate case value {value}")
                        seen.add(value)
        defaults = sum(1 for case in stmt.cases if case.default)
        if defaults != 1:
            self.problem(f"switch with {defaults} default clauses")
        for case in stmt.cases:
            if not case.values and not case.default:
                self.problem("case clause without values")
            self.block(case.body, set(visible), in_loop, True, in_continuing)


def _audit_types(module: IrModule, problems: List[str]):
    for i, ty in enumerate(module.types):
        if isinstance(ty, Vector) and not 2 <= ty.size <= 4:
            problems.append(f"type {i}: vector size {ty.size}")
        elif isinstance(ty, Matrix) and (not 2 <= ty.columns <= 4 or not 2 <= ty.rows <= 4
                                         or ty.element != F32):
            problems.append(f"type {i}: bad matrix {ty}")
        elif isinstance(ty, Array):
            if not 0 <= ty.element < i:
                problems.append(f"type {i}: array element {ty.element} does not precede it")
                continue
            if ty.length is not None and ty.length < 1:
                problems.append(f"type {i}: array length {ty.length}")
            if not is_constructible(module, module.types[ty.element]):
                problems.append(f"type {i}: array element is not constructible")
        elif isinstance(ty, Struct):
            names = [m.name for m in ty.members]
            if not names:
                problems.append(f"type {i}: empty struct")
            if len(set(names)) != len(names):
                problems.append(f"type {i}: duplicate member names in {ty.name}")
            for k, m in enumerate(ty.members):
                if not 0 <= m.ty < i:
                    problems.append(f"type {i}: member {m.name} type does not precede it")
                    continue
                member = module.types[m.ty]
                if isinstance(member, Pointer):
                    problems.append(f"type {i}: pointer member {m.name}")
                elif not is_constructible(module, member):
                    last = k == len(ty.members) - 1
                    if not (last and isinstance(member, Array) and member.length is None):
                        problems.append(f"type {i}: member {m.name} is not constructible")
        elif isinstance(ty, Pointer):
            if not 0 <= ty.pointee < len(module.types):
                problems.append(f"type {i}: dangling pointee")
    names = [t.name for t in module.types if isinstance(t, Struct)]
    if len(set(names)) != len(names):
        problems.append("duplicate struct names")


def _audit_globals(module: IrModule, problems: List[str]):
    bindings = set()
    for i, gv in enumerate(module.globals):
        if not 0 <= gv.ty < len(module.types):
            problems.append(f"global {gv.name}: dangling type")
            continue
        ty = module.types[gv.ty]
        if gv.space == 'private':
            if not is_constructible(module, ty):
                problems.append(f"global {gv.name}: private type is not constructible")
        elif gv.space == 'storage':
            if gv.group is None or gv.binding is None:
                problems.append(f"global {gv.name}: storage without group/binding")
            elif (gv.group, gv.binding) in bindings:
                problems.append(f"global {gv.name}: duplicate binding")
            bindings.add((gv.group, gv.binding))
            if not is_host_shareable(module, ty):
                problems.append(f"global {gv.name}: type is not host-shareable")
        else:
            problems.append(f"global {gv.name}: unsupported address space {gv.space}")


def _io_bindings(module: IrModule, ty_handle: int, binding) -> List:
    """(binding, type) pairs of one IO value; a struct contributes its members."""
    ty = module.types[ty_handle]
    if binding is not None:
        return [(binding, ty)]
    if isinstance(ty, Struct):
        return [(m.binding, module.types[m.ty]) for m in ty.members]
    return [(None, ty)]


def _check_io(module: IrModule, function: Function, pairs, output: bool, problems: List[str]):
    what = 'result' if output else 'parameter'
    for binding, ty in pairs:
        if binding is None:
            problems.append(f"{function.name}: entry-point {what} without binding")
        elif binding.builtin is not None:
            entry = BUILTIN_IO.get(binding.builtin)
            stages = None if entry is None else entry[2 if output else 1]
            if entry is None or function.stage not in stages:
                problems.append(f"{function.name}: builtin {binding.builtin} not valid as {what}")
            elif entry[0] != ty:
                problems.append(f"{function.name}: builtin {binding.builtin} has the wrong type")
        elif function.stage == 'compute':
            problems.append(f"{function.name}: compute entry points take no locations")
        elif not isinstance(ty, (Scalar, Vector)) or scalar_of(ty).kind == 'bool':
            problems.append(f"{function.name}: location {what} must be numeric")


def _audit_entry_point(module: IrModule, function: Function, problems: List[str]):
    if function.stage not in STAGES:
        problems.append(f"{function.name}: unknown stage {function.stage}")
        return
    inputs = []
    for p in function.params:
        inputs.extend(_io_bindings(module, p.ty, p.binding))
    _check_io(module, function, inputs, False, problems)
    if function.stage == 'compute':
        if function.result is not None:
            problems.append(f"{function.name}: compute entry point returns a value")
        if not all(1 <= d <= 256 for d in function.workgroup_size):
            problems.append(f"{function.name}: bad workgroup size")
        return
    result = function.result
    if result is None:
        if function.stage == 'vertex':
            problems.append(f"{function.name}: vertex entry point must return a position")
        return
    outputs = _io_bindings(module, result.ty, result.binding)
    _check_io(module, function, outputs, True, problems)
    builtins = [b.builtin for b, _ in outputs if b is not None]
    if function.stage == 'vertex' and builtins.count('position') != 1:
        problems.append(f"{function.name}: vertex result must contain one @builtin(position)")
    locations = [b.location for b, _ in outputs if b is not None and b.location is not None]
    if len(set(locations)) != len(locations):
        problems.append(f"{function.name}: duplicate output locations")


def _storage_reachable_from_vertex(module: IrModule) -> bool:
    uses_storage = []
    for function in module.functions:
        uses_storage.append(any(
            isinstance(e, GlobalVariable) and 0 <= e.index < len(module.globals)
            and module.globals[e.index].space == 'storage'
            for e in function.expressions))
    for index, function in enumerate(module.functions):
        if function.stage != 'vertex':
            continue
        pending, seen = [index], set()
        while pending:
            f = pending.pop()
            if f in seen or not 0 <= f < len(module.functions):
                continue
            seen.add(f)
            if uses_storage[f]:
                return True
            pending.extend(s.function for s in iter_statements(module.functions[f].body)
                           if isinstance(s, Call))
    return False


def audit_module(module: IrModule) -> List[str]:
    """All invariant violations of `module` (empty when well-formed)."""
    problems: List[str] = []
    _audit_types(module, problems)
    _audit_globals(module, problems)

    names = [f.name for f in module.functions]
    if len(set(names)) != len(names):
        problems.append("duplicate function names")
    if not module.entry_points():
        problems.append("module has no entry point")

    for index, function in enumerate(module.functions):
        for p in function.params:
            if not 0 <= p.ty < len(module.types) or not is_constructible(module, module.types[p.ty]):
                problems.append(f"{function.name}: parameter {p.name} has a bad type")
        if function.result is not None:
            if not 0 <= function.result.ty < len(module.types) or \
                    not is_constructible(module, module.types[function.result.ty]):
                problems.append(f"{function.name}: bad result type")
        for local in function.locals:
            if not 0 <= local.ty < len(module.types) or not is_constructible(module, module.types[local.ty]):
                problems.append(f"{function.name}: local {local.name} has a bad type")
        if function.is_entry_point:
            _audit_entry_point(module, function, problems)
        elif any(p.binding is not None for p in function.params) or \
                (function.result is not None and function.result.binding is not None):
            problems.append(f"{function.name}: IO bindings on a helper function")
        if problems:
            continue

        type_ok = True
        for h, expr in enumerate(function.expressions):
            try:
                inferred = infer_type(module, function, h)
            except IrTypeError as e:
                problems.append(f"{function.name}: {e}")
                type_ok = False
                continue
            if not 0 <= expr.ty < len(module.types) or module.types[expr.ty] != inferred:
                problems.append(f"{function.name}: [{h}] stored type differs from {inferred}")
                type_ok = False
        if not type_ok:
            continue

        walk = _Walk(module, index, problems)
        visible = {h for h, e in enumerate(function.expressions) if isinstance(e, ALWAYS_VISIBLE)}
        walk.block(function.body, visible, False, False, False)
        if function.result is not None and (not function.body or not isinstance(function.body[-1], Return)):
            problems.append(f"{function.name}: non-void function does not end with a return")

    if not problems and _storage_reachable_from_vertex(module):
        problems.append("storage variable accessed from a vertex entry point")
    return problems


def check_module(module: IrModule) -> IrModule:
    """Raise IrValidationError on the first problem; return the module otherwise."""
    problems = audit_module(module)
    if problems:
        raise IrValidationError(problems[0])
    return module


def is_well_formed(module: IrModule) -> bool:
    return not audit_module(module)
