"""
IR module model: expression arenas, statement blocks, functions, globals.

Expressions live in a per-function arena and refer to each other by index
(handle). Operands always precede their users, so the arena is in
topological order. Statements form nested blocks; an ``Emit`` makes a
computed expression available to the statements that follow it in the same
block and in nested blocks.
"""

import copy
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

from ir.types import IrType, Scalar, Struct, Binding


class IrTypeError(Exception):
    """An expression whose operands do not fit its operator."""


class IrValidationError(Exception):
    """A module that breaks a structural invariant (see ir.audit)."""


# ============================================================================
# Expressions
# ============================================================================

@dataclass
class FunctionArgument:
    index: int
    ty: int = -1

    def operands(self) -> Tuple[int, ...]:
        return ()


@dataclass
class LocalVariable:
    index: int
    ty: int = -1

    def operands(self):
        return ()


@dataclass
class GlobalVariable:
    index: int
    ty: int = -1

    def operands(self):
        return ()


@dataclass
class Literal:
    value: Union[bool, int, float]
    kind: str  # scalar kind
    ty: int = -1

    def operands(self):
        return ()


@dataclass
class Compose:
    components: List[int]
    ty: int = -1  # the constructed type

    def operands(self):
        return tuple(self.components)


@dataclass
class AccessIndex:
    """Constant member / element / column access."""
    base: int
    index: int
    ty: int = -1

    def operands(self):
        return (self.base,)


@dataclass
class Access:
    """Dynamic element access; `index` is an expression handle."""
    base: int
    index: int
    ty: int = -1

    def operands(self):
        return (self.base, self.index)


@dataclass
class Unary:
    op: str  # neg | not | bitnot
    expr: int
    ty: int = -1

    def operands(self):
        return (self.expr,)


@dataclass
class Binary:
    op: str
    left: int
    right: int
    ty: int = -1

    def operands(self):
        return (self.left, self.right)


@dataclass
class CallResult:
    function: int
    ty: int = -1

    def operands(self):
        return ()


@dataclass
class BuiltinCall:
    name: str
    args: List[int]
    ty: int = -1

    def operands(self):
        return tuple(self.args)


@dataclass
class Load:
    pointer: int
    ty: int = -1

    def operands(self):
        return (self.pointer,)


Expression = Union[FunctionArgument, LocalVariable, GlobalVariable, Literal, Compose,
                   AccessIndex, Access, Unary, Binary, CallResult, BuiltinCall, Load]

# Expressions visible everywhere in their function without an Emit
ALWAYS_VISIBLE = (FunctionArgument, LocalVariable, GlobalVariable, Literal)

UNARY_OPS = ('neg', 'not', 'bitnot')
ARITHMETIC_OPS = ('add', 'sub', 'mul', 'div', 'mod')
BITWISE_OPS = ('and', 'or', 'xor')
SHIFT_OPS = ('shl', 'shr')
EQUALITY_OPS = ('eq', 'ne')
ORDER_OPS = ('lt', 'le', 'gt', 'ge')
LOGICAL_OPS = ('logical_and', 'logical_or')
BINARY_OPS = ARITHMETIC_OPS + BITWISE_OPS + SHIFT_OPS + EQUALITY_OPS + ORDER_OPS + LOGICAL_OPS


def remap_operands(expr, mapping) -> None:
    """Rewrite operand handles in place through `mapping` (callable)."""
    if isinstance(expr, Compose):
        expr.components = [mapping(h) for h in expr.components]
    elif isinstance(expr, AccessIndex):
        expr.base = mapping(expr.base)
    elif isinstance(expr, Access):
        expr.base = mapping(expr.base)
        expr.index = mapping(expr.index)
    elif isinstance(expr, Unary):
        expr.expr = mapping(expr.expr)
    elif isinstance(expr, Binary):
        expr.left = mapping(expr.left)
        expr.right = mapping(expr.right)
    elif isinstance(expr, BuiltinCall):
        expr.args = [mapping(h) for h in expr.args]
    elif isinstance(expr, Load):
        expr.pointer = mapping(expr.pointer)


# ============================================================================
# Statements
# ============================================================================

@dataclass
class Emit:
    expr: int


@dataclass
class Store:
    pointer: int
    value: int


@dataclass
class Call:
    function: int
    arguments: List[int]
    result: Optional[int] = None


@dataclass
class If:
    condition: int
    accept: List['Statement'] = field(default_factory=list)
    reject: List['Statement'] = field(default_factory=list)


@dataclass
class Loop:
    body: List['Statement'] = field(default_factory=list)
    continuing: List['Statement'] = field(default_factory=list)
    break_if: Optional[int] = None


@dataclass
class Break:
    pass


@dataclass
class Continue:
    pass


@dataclass
class Return:
    value: Optional[int] = None


@dataclass
class SwitchCase:
    values: List[int]  # selector values; empty with default=True is a pure default
    default: bool = False
    body: List['Statement'] = field(default_factory=list)


@dataclass
class Switch:
    selector: int
    cases: List[SwitchCase] = field(default_factory=list)


Statement = Union[Emit, Store, Call, If, Loop, Break, Continue, Return, Switch]


def statement_operands(stmt) -> Tuple[int, ...]:
    if isinstance(stmt, Emit):
        return (stmt.expr,)
    if isinstance(stmt, Store):
        return (stmt.pointer, stmt.value)
    if isinstance(stmt, Call):
        return tuple(stmt.arguments) + ((stmt.result,) if stmt.result is not None else ())
    if isinstance(stmt, If):
        return (stmt.condition,)
    if isinstance(stmt, Loop):
        return (stmt.break_if,) if stmt.break_if is not None else ()
    if isinstance(stmt, Return):
        return (stmt.value,) if stmt.value is not None else ()
    if isinstance(stmt, Switch):
        return (stmt.selector,)
    return ()


def child_blocks(stmt) -> List[List]:
    if isinstance(stmt, If):
        return [stmt.accept, stmt.reject]
    if isinstance(stmt, Loop):
        return [stmt.body, stmt.continuing]
    if isinstance(stmt, Switch):
        return [case.body for case in stmt.cases]
    return []


def iter_statements(block: List) -> List:
    """All statements of a block tree in pre-order."""
    out = []
    stack = [iter(block)]
    while stack:
        stmt = next(stack[-1], None)
        if stmt is None:
            stack.pop()
            continue
        out.append(stmt)
        blocks = child_blocks(stmt)
        for b in reversed(blocks):
            stack.append(iter(b))
    return out


def remap_statement(stmt, mapping) -> None:
    """Rewrite expression handles of one statement (not its children)."""
    if isinstance(stmt, Emit):
        stmt.expr = mapping(stmt.expr)
    elif isinstance(stmt, Store):
        stmt.pointer = mapping(stmt.pointer)
        stmt.value = mapping(stmt.value)
    elif isinstance(stmt, Call):
        stmt.arguments = [mapping(h) for h in stmt.arguments]
        if stmt.result is not None:
            stmt.result = mapping(stmt.result)
    elif isinstance(stmt, If):
        stmt.condition = mapping(stmt.condition)
    elif isinstance(stmt, Loop):
        if stmt.break_if is not None:
            stmt.break_if = mapping(stmt.break_if)
    elif isinstance(stmt, Return):
        if stmt.value is not None:
            stmt.value = mapping(stmt.value)
    elif isinstance(stmt, Switch):
        stmt.selector = mapping(stmt.selector)


# ============================================================================
# Functions, globals, module
# ============================================================================

@dataclass
class FunctionParam:
    name: str
    ty: int
    binding: Optional[Binding] = None


@dataclass
class FunctionResult:
    ty: int
    binding: Optional[Binding] = None


@dataclass
class LocalVar:
    name: str
    ty: int


@dataclass
class Function:
    name: str
    params: List[FunctionParam] = field(default_factory=list)
    result: Optional[FunctionResult] = None
    locals: List[LocalVar] = field(default_factory=list)
    expressions: List[Expression] = field(default_factory=list)
    body: List[Statement] = field(default_factory=list)
    stage: Optional[str] = None  # compute | vertex | fragment
    workgroup_size: Tuple[int, int, int] = (1, 1, 1)

    @property
    def is_entry_point(self) -> bool:
        return self.stage is not None

    def statement_count(self) -> int:
        return len(iter_statements(self.body))


@dataclass
class GlobalVar:
    name: str
    ty: int
    space: str  # private | storage
    group: Optional[int] = None
    binding: Optional[int] = None


@dataclass
class IrModule:
    types: List[IrType] = field(default_factory=list)
    globals: List[GlobalVar] = field(default_factory=list)
    functions: List[Function] = field(default_factory=list)

    def intern(self, ty: IrType) -> int:
        """Handle of `ty`, adding it to the arena if new."""
        for i, existing in enumerate(self.types):
            if existing == ty:
                return i
        self.types.append(ty)
        return len(self.types) - 1

    def clone(self) -> 'IrModule':
        return copy.deepcopy(self)

    def entry_points(self) -> List[Function]:
        return [f for f in self.functions if f.is_entry_point]

    def size(self) -> int:
        """Expression plus statement count over all functions, plus globals."""
        return sum(len(f.expressions) + f.statement_count() for f in self.functions) + len(self.globals)

    def struct_handles(self) -> List[int]:
        return [i for i, t in enumerate(self.types) if isinstance(t, Struct)]


def add_expression(function: Function, expr) -> int:
    function.expressions.append(expr)
    return len(function.expressions) - 1


def minimal_module() -> IrModule:
    """The fallback module: one empty compute entry point."""
    module = IrModule()
    for kind in ('bool', 'i32', 'u32', 'f32'):
        module.intern(Scalar(kind))
    module.functions.append(Function(name='f0', stage='compute', workgroup_size=(1, 1, 1)))
    return module
