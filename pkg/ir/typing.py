"""
Type rules of the IR.

``infer_type`` recomputes the type of one expression from its operands; the
stored ``ty`` of a well-formed module always equals it. Pointer-valued
results need a pointee handle, so inference may intern new types into the
module arena (existing handles never move).
"""

import math
from typing import Optional

import numpy as np

from ir.builtins import Shape, builtin_result, POINTER_BUILTINS
from ir.module import (
    IrModule, Function, IrTypeError, FunctionArgument, LocalVariable, GlobalVariable,
    Literal, Compose, AccessIndex, Access, Unary, Binary, CallResult, BuiltinCall, Load,
    ARITHMETIC_OPS, BITWISE_OPS, SHIFT_OPS, EQUALITY_OPS, ORDER_OPS, LOGICAL_OPS,
    add_expression,
)
from ir.types import (
    IrType, Scalar, Vector, Matrix, Array, Struct, Pointer, BOOL, U32,
    scalar_of, with_scalar,
)

I32_MIN = -(1 << 31)
I32_MAX = (1 << 31) - 1
U32_MAX = (1 << 32) - 1
F32_MAX = float(np.finfo(np.float32).max)


# ============================================================================
# Type predicates
# ============================================================================

def is_constructible(module: IrModule, ty: IrType) -> bool:
    """Types that can be built with a value constructor (and loaded)."""
    if isinstance(ty, (Scalar, Vector, Matrix)):
        return True
    if isinstance(ty, Array):
        return ty.length is not None and is_constructible(module, module.types[ty.element])
    if isinstance(ty, Struct):
        return all(is_constructible(module, module.types[m.ty]) for m in ty.members)
    return False


def is_host_shareable(module: IrModule, ty: IrType) -> bool:
    """Types allowed in the storage address space (no bool anywhere)."""
    if isinstance(ty, Scalar):
        return ty.kind != 'bool'
    if isinstance(ty, Vector):
        return ty.element.kind != 'bool'
    if isinstance(ty, Matrix):
        return True
    if isinstance(ty, Array):
        return is_host_shareable(module, module.types[ty.element])
    if isinstance(ty, Struct):
        return all(is_host_shareable(module, module.types[m.ty]) for m in ty.members)
    return False


def shape_of(ty: IrType) -> Optional[Shape]:
    if isinstance(ty, Scalar):
        return Shape('scalar', 1, 1, ty.kind)
    if isinstance(ty, Vector):
        return Shape('vector', ty.size, 1, ty.element.kind)
    if isinstance(ty, Matrix):
        return Shape('matrix', ty.columns, ty.rows, ty.element.kind)
    return None


def type_of_shape(shape: Shape) -> IrType:
    if shape.cat == 'scalar':
        return Scalar(shape.kind)
    if shape.cat == 'vector':
        return Vector(shape.n, Scalar(shape.kind))
    return Matrix(shape.n, shape.m, Scalar(shape.kind))


def literal_in_range(value, kind: str) -> bool:
    if kind == 'bool':
        return isinstance(value, bool)
    if isinstance(value, bool):
        return False
    if kind == 'i32':
        return isinstance(value, int) and I32_MIN <= value <= I32_MAX
    if kind == 'u32':
        return isinstance(value, int) and 0 <= value <= U32_MAX
    if not isinstance(value, (int, float)):
        return False
    return math.isfinite(value) and abs(value) <= F32_MAX


# ============================================================================
# Inference
# ============================================================================

def expr_type(module: IrModule, function: Function, handle: int) -> IrType:
    """Stored type of an expression."""
    return module.types[function.expressions[handle].ty]


def _operand_type(module, function, handle, user) -> IrType:
    if not 0 <= handle < user:
        raise IrTypeError(f"[{user}] refers to [{handle}], which does not precede it")
    ty = function.expressions[handle].ty
    if not 0 <= ty < len(module.types):
        raise IrTypeError(f"[{handle}] has no resolved type")
    return module.types[ty]


def _literal_operand(function, handle) -> Optional[Literal]:
    expr = function.expressions[handle]
    return expr if isinstance(expr, Literal) else None


def _access_result(module, base_ty, index: Optional[int], user) -> IrType:
    """Element type of indexing `base_ty`; `index` is a known constant or None."""
    if isinstance(base_ty, Pointer):
        inner = module.types[base_ty.pointee]
        element = _access_result(module, inner, index, user)
        return Pointer(base_ty.space, module.intern(element))
    if isinstance(base_ty, Vector):
        bound, element = base_ty.size, base_ty.element
    elif isinstance(base_ty, Matrix):
        bound, element = base_ty.columns, Vector(base_ty.rows, base_ty.element)
    elif isinstance(base_ty, Array):
        bound, element = base_ty.length, module.types[base_ty.element]
    elif isinstance(base_ty, Struct):
        if index is None:
            raise IrTypeError(f"[{user}] struct members need a constant index")
        bound, element = len(base_ty.members), None
    else:
        raise IrTypeError(f"[{user}] cannot index into {base_ty}")
    if index is not None and index < 0:
        raise IrTypeError(f"[{user}] negative index {index}")
    if index is not None and bound is not None and not 0 <= index < bound:
        raise IrTypeError(f"[{user}] index {index} out of bounds ({bound})")
    if element is None:
        return module.types[base_ty.members[index].ty]
    return element


def _binary_type(module, function, expr: Binary, user) -> IrType:
    left = _operand_type(module, function, expr.left, user)
    right = _operand_type(module, function, expr.right, user)
    op = expr.op
    ls, rs = scalar_of(left), scalar_of(right)

    if op in ARITHMETIC_OPS:
        if op == 'mul':
            if isinstance(left, Matrix) and isinstance(right, Vector) and right.size == left.columns:
                return Vector(left.rows, left.element)
            if isinstance(left, Vector) and isinstance(right, Matrix) and left.size == right.rows:
                return Vector(right.columns, right.element)
            if isinstance(left, Matrix) and isinstance(right, Matrix) and left.columns == right.rows:
                return Matrix(right.columns, left.rows, left.element)
            if isinstance(left, Matrix) and right == left.element:
                return left
            if isinstance(right, Matrix) and left == right.element:
                return right
        if op in ('add', 'sub') and isinstance(left, Matrix) and left == right:
            return left
        if ls is None or rs is None or ls != rs or ls.kind == 'bool':
            raise IrTypeError(f"[{user}] '{op}' on {left} and {right}")
        if isinstance(left, Vector) and isinstance(right, Vector) and left.size != right.size:
            raise IrTypeError(f"[{user}] '{op}' on vectors of different size")
        if op in ('div', 'mod') and ls.kind != 'f32':
            divisor = _literal_operand(function, expr.right)
            if divisor is not None and divisor.value == 0:
                raise IrTypeError(f"[{user}] integer division by constant zero")
        return left if isinstance(left, Vector) else right

    if op in BITWISE_OPS:
        if left != right or ls is None:
            raise IrTypeError(f"[{user}] '{op}' on {left} and {right}")
        if ls.kind in ('i32', 'u32') or (ls.kind == 'bool' and op != 'xor'):
            return left
        raise IrTypeError(f"[{user}] '{op}' on {left}")

    if op in SHIFT_OPS:
        if ls is None or ls.kind not in ('i32', 'u32') or right != with_scalar(left, U32):
            raise IrTypeError(f"[{user}] '{op}' on {left} and {right}")
        amount = _literal_operand(function, expr.right)
        if amount is not None and amount.value >= 32:
            raise IrTypeError(f"[{user}] constant shift amount {amount.value} >= 32")
        return left

    if op in EQUALITY_OPS or op in ORDER_OPS:
        if left != right or ls is None or (op in ORDER_OPS and ls.kind == 'bool'):
            raise IrTypeError(f"[{user}] '{op}' on {left} and {right}")
        return with_scalar(left, BOOL)

    if op in LOGICAL_OPS:
        if left != BOOL or right != BOOL:
            raise IrTypeError(f"[{user}] '{op}' needs bool operands")
        return BOOL

    raise IrTypeError(f"[{user}] unknown binary operator '{op}'")


def _compose_check(module, function, expr: Compose, user) -> IrType:
    if not 0 <= expr.ty < len(module.types):
        raise IrTypeError(f"[{user}] compose without a target type")
    target = module.types[expr.ty]
    parts = [_operand_type(module, function, h, user) for h in expr.components]
    if any(isinstance(p, Pointer) for p in parts):
        raise IrTypeError(f"[{user}] compose of a pointer")
    if not is_constructible(module, target):
        raise IrTypeError(f"[{user}] {target} is not constructible")
    if not parts:
        return target  # zero value

    if isinstance(target, Scalar):
        if len(parts) == 1 and isinstance(parts[0], Scalar):
            return target
    elif isinstance(target, Vector):
        if len(parts) == 1 and isinstance(parts[0], Vector) and parts[0].size == target.size:
            return target  # conversion
        if len(parts) == 1 and parts[0] == target.element:
            return target  # splat
        total = 0
        for p in parts:
            if p == target.element:
                total += 1
            elif isinstance(p, Vector) and p.element == target.element:
                total += p.size
            else:
                total = -1
                break
        if total == target.size:
            return target
    elif isinstance(target, Matrix):
        column = Vector(target.rows, target.element)
        if len(parts) == target.columns and all(p == column for p in parts):
            return target
        if len(parts) == target.columns * target.rows and all(p == target.element for p in parts):
            return target
    elif isinstance(target, Array):
        element = module.types[target.element]
        if len(parts) == target.length and all(p == element for p in parts):
            return target
    elif isinstance(target, Struct):
        members = [module.types[m.ty] for m in target.members]
        if parts == members:
            return target
    raise IrTypeError(f"[{user}] cannot construct {target} from {len(parts)} components")


def infer_type(module: IrModule, function: Function, handle: int) -> IrType:
    """Type of expression `handle` of `function` according to the IR rules.

    Raises:
        IrTypeError: If the operands do not fit the operation
    """
    if not 0 <= handle < len(function.expressions):
        raise IrTypeError(f"invalid expression handle {handle}")
    expr = function.expressions[handle]

    if isinstance(expr, FunctionArgument):
        if not 0 <= expr.index < len(function.params):
            raise IrTypeError(f"[{handle}] argument {expr.index} out of range")
        return module.types[function.params[expr.index].ty]
    if isinstance(expr, LocalVariable):
        if not 0 <= expr.index < len(function.locals):
            raise IrTypeError(f"[{handle}] local {expr.index} out of range")
        return Pointer('function', function.locals[expr.index].ty)
    if isinstance(expr, GlobalVariable):
        if not 0 <= expr.index < len(module.globals):
            raise IrTypeError(f"[{handle}] global {expr.index} out of range")
        gv = module.globals[expr.index]
        return Pointer(gv.space, gv.ty)
    if isinstance(expr, Literal):
        if not literal_in_range(expr.value, expr.kind):
            raise IrTypeError(f"[{handle}] literal {expr.value!r} does not fit {expr.kind}")
        return Scalar(expr.kind)
    if isinstance(expr, Compose):
        return _compose_check(module, function, expr, handle)
    if isinstance(expr, AccessIndex):
        base = _operand_type(module, function, expr.base, handle)
        return _access_result(module, base, expr.index, handle)
    if isinstance(expr, Access):
        base = _operand_type(module, function, expr.base, handle)
        index_ty = _operand_type(module, function, expr.index, handle)
        if index_ty not in (Scalar('i32'), U32):
            raise IrTypeError(f"[{handle}] index must be i32 or u32, not {index_ty}")
        inner = module.types[base.pointee] if isinstance(base, Pointer) else base
        if isinstance(inner, Struct):
            raise IrTypeError(f"[{handle}] dynamic index into a struct")
        if not isinstance(base, Pointer) and isinstance(inner, Array):
            raise IrTypeError(f"[{handle}] dynamic index into an array value")
        literal = _literal_operand(function, expr.index)
        return _access_result(module, base, literal.value if literal is not None else None, handle)
    if isinstance(expr, Unary):
        operand = _operand_type(module, function, expr.expr, handle)
        scalar = scalar_of(operand)
        allowed = {'neg': ('i32', 'f32'), 'not': ('bool',), 'bitnot': ('i32', 'u32')}.get(expr.op)
        if allowed is None:
            raise IrTypeError(f"[{handle}] unknown unary operator '{expr.op}'")
        if scalar is None or scalar.kind not in allowed:
            raise IrTypeError(f"[{handle}] '{expr.op}' on {operand}")
        return operand
    if isinstance(expr, Binary):
        return _binary_type(module, function, expr, handle)
    if isinstance(expr, CallResult):
        if not 0 <= expr.function < len(module.functions):
            raise IrTypeError(f"[{handle}] call of unknown function {expr.function}")
        result = module.functions[expr.function].result
        if result is None:
            raise IrTypeError(f"[{handle}] result of a void function")
        return module.types[result.ty]
    if isinstance(expr, BuiltinCall):
        args = [_operand_type(module, function, h, handle) for h in expr.args]
        if expr.name in POINTER_BUILTINS:
            if len(args) == 1 and isinstance(args[0], Pointer) and args[0].space == 'storage':
                inner = module.types[args[0].pointee]
                if isinstance(inner, Array) and inner.length is None:
                    return U32
            raise IrTypeError(f"[{handle}] {expr.name} needs a pointer to a runtime-sized array")
        shapes = [shape_of(a) for a in args]
        if any(s is None for s in shapes):
            raise IrTypeError(f"[{handle}] {expr.name} on non-numeric arguments")
        result = builtin_result(expr.name, shapes)
        if result is None:
            raise IrTypeError(f"[{handle}] no overload of {expr.name} for {args}")
        return type_of_shape(result)
    if isinstance(expr, Load):
        pointer = _operand_type(module, function, expr.pointer, handle)
        if not isinstance(pointer, Pointer):
            raise IrTypeError(f"[{handle}] load from non-pointer {pointer}")
        pointee = module.types[pointer.pointee]
        if not is_constructible(module, pointee):
            raise IrTypeError(f"[{handle}] load of non-constructible {pointee}")
        return pointee
    raise IrTypeError(f"[{handle}] unknown expression {type(expr).__name__}")


def add_typed(module: IrModule, function: Function, expr) -> int:
    """Append `expr`, resolve its type and return the new handle.

    Compose expressions must already carry their target type. On a type
    error the expression is removed again and the error re-raised.
    """
    handle = add_expression(function, expr)
    try:
        ty = infer_type(module, function, handle)
    except IrTypeError:
        function.expressions.pop()
        raise
    expr.ty = module.intern(ty)
    return handle


def zero_value(module: IrModule, function: Function, ty_handle: int) -> int:
    """Handle of a zero value of type `ty_handle` (a literal for scalars)."""
    ty = module.types[ty_handle]
    if isinstance(ty, Scalar):
        value = {'bool': False, 'i32': 0, 'u32': 0, 'f32': 0.0}[ty.kind]
        return add_typed(module, function, Literal(value, ty.kind))
    return add_typed(module, function, Compose([], ty=ty_handle))
