"""
Lifting: IrModule to WGSL text.

Emitted value expressions become ``let _e<handle>`` bindings; pointer
expressions are never bound and are spelled inline as references
(``v0``, ``g1.m0``, ``g2[_e5]``). Binary and unary expressions are fully
parenthesized. An operator whose operands are all literals would be folded
by the front-end at shader-creation time, so its first operand is bound to
a ``let _c<handle>`` first; a ``let`` is never a constant expression.
"""

import math
from typing import Dict, List

from ir.module import (
    IrModule, Function, FunctionArgument, LocalVariable, GlobalVariable, Literal,
    Compose, AccessIndex, Access, Unary, Binary, CallResult, BuiltinCall, Load,
    Emit, Store, Call, If, Loop, Break, Continue, Return, Switch,
)
from ir.types import Scalar, Vector, Matrix, Array, Struct, Pointer
from ir.typing import I32_MIN

INDENT = '    '

BINARY_SYMBOLS = {
    'add': '+', 'sub': '-', 'mul': '*', 'div': '/', 'mod': '%',
    'and': '&', 'or': '|', 'xor': '^', 'shl': '<<', 'shr': '>>',
    'eq': '==', 'ne': '!=', 'lt': '<', 'le': '<=', 'gt': '>', 'ge': '>=',
    'logical_and': '&&', 'logical_or': '||',
}
UNARY_SYMBOLS = {'neg': '-', 'not': '!', 'bitnot': '~'}


def literal_text(value, kind: str) -> str:
    """WGSL spelling of a concrete literal; negative values are parenthesized."""
    if kind == 'bool':
        return 'true' if value else 'false'
    if kind == 'i32':
        value = int(value)
        if value == I32_MIN:
            return f"(-{-(value + 1)}i - 1i)"
        return f"{value}i" if value >= 0 else f"(-{-value}i)"
    if kind == 'u32':
        return f"{int(value)}u"
    value = float(value)
    if math.copysign(1.0, value) < 0:
        return f"(-{repr(-value)}f)"
    return f"{repr(value)}f"


def type_text(module: IrModule, ty) -> str:
    if isinstance(ty, int):
        ty = module.types[ty]
    if isinstance(ty, Scalar):
        return ty.kind
    if isinstance(ty, Vector):
        return f"vec{ty.size}<{ty.element.kind}>"
    if isinstance(ty, Matrix):
        return f"mat{ty.columns}x{ty.rows}<{ty.element.kind}>"
    if isinstance(ty, Array):
        element = type_text(module, ty.element)
        if ty.length is None:
            return f"array<{element}>"
        return f"array<{element}, {ty.length}>"
    if isinstance(ty, Struct):
        return ty.name
    if isinstance(ty, Pointer):
        return f"ptr<{ty.space}, {type_text(module, ty.pointee)}>"
    raise TypeError(f"cannot spell type {ty!r}")


class _FunctionLifter:

    def __init__(self, module: IrModule, function: Function):
        self.module = module
        self.function = function
        self.names: Dict[int, str] = {}
        self.lines: List[str] = []

    # ------------------------------------------------------------------
    # expressions
    # ------------------------------------------------------------------

    def _is_pointer(self, handle: int) -> bool:
        ty = self.function.expressions[handle].ty
        return isinstance(self.module.types[ty], Pointer)

    def ref(self, handle: int) -> str:
        """Spelling of an operand: a name, a literal or an inline reference."""
        expr = self.function.expressions[handle]
        if handle in self.names:
            return self.names[handle]
        if isinstance(expr, Literal):
            return literal_text(expr.value, expr.kind)
        if isinstance(expr, FunctionArgument):
            return self.function.params[expr.index].name
        if isinstance(expr, LocalVariable):
            return self.function.locals[expr.index].name
        if isinstance(expr, GlobalVariable):
            return self.module.globals[expr.index].name
        if isinstance(expr, (AccessIndex, Access)) and self._is_pointer(handle):
            return self._access_text(expr)
        return f"_e{handle}"

    def _access_text(self, expr) -> str:
        base = self.ref(expr.base)
        base_ty = self.module.types[self.function.expressions[expr.base].ty]
        if isinstance(base_ty, Pointer):
            base_ty = self.module.types[base_ty.pointee]
        if isinstance(expr, AccessIndex):
            if isinstance(base_ty, Struct):
                return f"{base}.{base_ty.members[expr.index].name}"
            return f"{base}[{expr.index}]"
        return f"{base}[{self.ref(expr.index)}]"

    def _all_literal(self, operands) -> bool:
        return bool(operands) and all(isinstance(self.function.expressions[h], Literal) for h in operands)

    def value_text(self, handle: int, depth: int) -> str:
        expr = self.function.expressions[handle]
        operands = list(expr.operands())
        refs = [self.ref(h) for h in operands]
        folds = isinstance(expr, (Unary, Binary, BuiltinCall)) or (
            isinstance(expr, Compose) and len(operands) == 1)
        if folds and self._all_literal(operands):
            name = f"_c{handle}"
            self.emit_line(depth, f"let {name} = {refs[0]};")
            refs[0] = name

        if isinstance(expr, Compose):
            return f"{type_text(self.module, expr.ty)}({', '.join(refs)})"
        if isinstance(expr, (AccessIndex, Access)):
            if isinstance(expr, AccessIndex):
                return self._access_text(expr)
            return f"{refs[0]}[{refs[1]}]"
        if isinstance(expr, Unary):
            return f"({UNARY_SYMBOLS[expr.op]}{refs[0]})"
        if isinstance(expr, Binary):
            return f"({refs[0]} {BINARY_SYMBOLS[expr.op]} {refs[1]})"
        if isinstance(expr, BuiltinCall):
            if expr.name == 'arrayLength':
                return f"arrayLength(&{refs[0]})"
            return f"{expr.name}({', '.join(refs)})"
        if isinstance(expr, Load):
            return refs[0]
        raise TypeError(f"expression [{handle}] cannot be emitted")

    # ------------------------------------------------------------------
    # statements
    # ------------------------------------------------------------------

    def emit_line(self, depth: int, text: str):
        self.lines.append(INDENT * depth + text)

    def block(self, statements, depth: int):
        for stmt in statements:
            self.statement(stmt, depth)

    def statement(self, stmt, depth: int):
        if isinstance(stmt, Emit):
            if self._is_pointer(stmt.expr):
                return
            text = self.value_text(stmt.expr, depth)
            self.names[stmt.expr] = f"_e{stmt.expr}"
            self.emit_line(depth, f"let _e{stmt.expr} = {text};")
        elif isinstance(stmt, Store):
            self.emit_line(depth, f"{self.ref(stmt.pointer)} = {self.ref(stmt.value)};")
        elif isinstance(stmt, Call):
            callee = self.module.functions[stmt.function].name
            args = ', '.join(self.ref(h) for h in stmt.arguments)
            if stmt.result is None:
                self.emit_line(depth, f"{callee}({args});")
            else:
                self.names[stmt.result] = f"_e{stmt.result}"
                self.emit_line(depth, f"let _e{stmt.result} = {callee}({args});")
        elif isinstance(stmt, If):
            self.emit_line(depth, f"if {self.ref(stmt.condition)} {{")
            self.block(stmt.accept, depth + 1)
            if stmt.reject:
                self.emit_line(depth, "} else {")
                self.block(stmt.reject, depth + 1)
            self.emit_line(depth, "}")
        elif isinstance(stmt, Loop):
            self.emit_line(depth, "loop {")
            self.block(stmt.body, depth + 1)
            if stmt.continuing or stmt.break_if is not None:
                self.emit_line(depth + 1, "continuing {")
                self.block(stmt.continuing, depth + 2)
                if stmt.break_if is not None:
                    self.emit_line(depth + 2, f"break if {self.ref(stmt.break_if)};")
                self.emit_line(depth + 1, "}")
            self.emit_line(depth, "}")
        elif isinstance(stmt, Break):
            self.emit_line(depth, "break;")
        elif isinstance(stmt, Continue):
            self.emit_line(depth, "continue;")
        elif isinstance(stmt, Return):
            if stmt.value is None:
                self.emit_line(depth, "return;")
            else:
                self.emit_line(depth, f"return {self.ref(stmt.value)};")
        elif isinstance(stmt, Switch):
            kind = self.module.types[self.function.expressions[stmt.selector].ty].kind
            self.emit_line(depth, f"switch {self.ref(stmt.selector)} {{")
            for case in stmt.cases:
                labels = [literal_text(v, kind) for v in case.values]
                if case.default:
                    labels.append('default')
                head = 'default' if labels == ['default'] else f"case {', '.join(labels)}"
                self.emit_line(depth + 1, f"{head}: {{")
                self.block(case.body, depth + 2)
                self.emit_line(depth + 1, "}")
            self.emit_line(depth, "}")
        else:
            raise TypeError(f"unknown statement {type(stmt).__name__}")

    # ------------------------------------------------------------------

    def lift(self) -> List[str]:
        f = self.function
        header = []
        if f.stage == 'compute':
            x, y, z = f.workgroup_size
            header.append(f"@compute @workgroup_size({x}, {y}, {z})")
        elif f.stage is not None:
            header.append(f"@{f.stage}")
        params = []
        for p in f.params:
            prefix = f"{p.binding} " if p.binding is not None else ''
            params.append(f"{prefix}{p.name}: {type_text(self.module, p.ty)}")
        signature = f"fn {f.name}({', '.join(params)})"
        if f.result is not None:
            prefix = f"{f.result.binding} " if f.result.binding is not None else ''
            signature += f" -> {prefix}{type_text(self.module, f.result.ty)}"
        header.append(signature + " {")
        self.lines = header
        for local in f.locals:
            self.emit_line(1, f"var {local.name}: {type_text(self.module, local.ty)};")
        self.block(f.body, 1)
        self.lines.append("}")
        return self.lines


def lift(module: IrModule) -> str:
    """Deterministic WGSL text for a well-formed module."""
    out: List[str] = []
    for ty in module.types:
        if isinstance(ty, Struct):
            out.append(f"struct {ty.name} {{")
            for m in ty.members:
                prefix = f"{m.binding} " if m.binding is not None else ''
                out.append(f"{INDENT}{prefix}{m.name}: {type_text(module, m.ty)},")
            out.append("}")
            out.append("")
    for gv in module.globals:
        ty = type_text(module, gv.ty)
        if gv.space == 'storage':
            out.append(f"@group({gv.group}) @binding({gv.binding}) var<storage, read_write> {gv.name}: {ty};")
        else:
            out.append(f"var<{gv.space}> {gv.name}: {ty};")
    if module.globals:
        out.append("")
    for function in module.functions:
        out.extend(_FunctionLifter(module, function).lift())
        out.append("")
    return '\n'.join(out)
