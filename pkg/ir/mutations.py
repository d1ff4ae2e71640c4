"""
The six IR mutations.

Same shape as the grammar-level operators in syntax.mutations: an operator
lists its ``sites`` on a module and ``apply_at`` one of them to a clone,
returning None when the site turns out to be unusable. Mutations that change
a type repair the dependent uses (conversions at loads, stores and call
sites; padded or truncated constructors). ``mutate_ir`` audits every result
and retries, or moves on to another operator, when the audit fails.
"""

import random
from typing import Dict, List, Mapping, Optional, Tuple

from config.config import IR_MUTATION_RETRIES, MAX_ARRAY_LENGTH
from ir.audit import is_well_formed
from ir.builtins import BUILTINS, POINTER_BUILTINS, builtin_result, compatible_builtins
from ir.generator import BodyBuilder, GenerationLimits, constructible_types
from ir.module import (
    IrModule, Function, FunctionParam, IrTypeError, ALWAYS_VISIBLE,
    FunctionArgument, LocalVariable, Literal, Compose, AccessIndex, Access, Unary, Binary,
    BuiltinCall, Load, Emit, Store, Call, If, Loop, Break, Continue, Return, Switch,
    UNARY_OPS, BINARY_OPS, child_blocks, iter_statements, remap_operands, remap_statement,
)
from ir.scope import scope_points, visible_after_continuing
from ir.types import SCALAR_KINDS, Scalar, Vector, Array, Pointer
from ir.typing import infer_type, add_typed, literal_in_range, shape_of, type_of_shape
from syntax.mutations import MutationResult
from util.log_utils import log_debug

INTERESTING_INTS = (0, 1, -1, 2) + tuple(1 << k for k in range(2, 32)) + ((1 << 31) - 1, (1 << 32) - 1)
INTERESTING_FLOATS = (0.0, 1.0, -1.0, 2.0, 0.5, -0.0, 1e-45, 3.4e38) + tuple(float(1 << k) for k in range(2, 32, 5))

_OPERAND_FIELDS = {
    AccessIndex: ('base',),
    Access: ('base', 'index'),
    Unary: ('expr',),
    Binary: ('left', 'right'),
    Load: ('pointer',),
}
_TERMINATORS = (Break, Continue, Return)


# ============================================================================
# Arena editing
# ============================================================================

def insert_expression(function: Function, at: int, expr) -> int:
    """Insert `expr` at arena position `at`; every handle >= at moves up by one."""
    def shift(h):
        return h + 1 if h >= at else h

    for e in function.expressions:
        remap_operands(e, shift)
    for stmt in iter_statements(function.body):
        remap_statement(stmt, shift)
    function.expressions.insert(at, expr)
    return at


def replace_uses(function: Function, old: int, new: int, skip=()):
    """Point every use of `old` (expressions and statements) at `new`."""
    def swap(h):
        return new if h == old else h

    for h, e in enumerate(function.expressions):
        if h not in skip:
            remap_operands(e, swap)
    for stmt in iter_statements(function.body):
        remap_statement(stmt, swap)


def locate(block: list, target) -> Optional[Tuple[list, int]]:
    """(block, index) of statement object `target` in a block tree."""
    for i, stmt in enumerate(block):
        if stmt is target:
            return block, i
        for child in child_blocks(stmt):
            found = locate(child, target)
            if found is not None:
                return found
    return None


def find_emit(block: list, handle: int) -> Optional[Emit]:
    for stmt in iter_statements(block):
        if isinstance(stmt, Emit) and stmt.expr == handle:
            return stmt
    return None


def _emit_before(function: Function, handle: int, anchor):
    block, i = locate(function.body, anchor)
    block.insert(i, Emit(handle))


def insert_before_user(module: IrModule, function: Function, user: int, expr) -> int:
    """Insert a new operand for expression `user` directly below it.

    The new expression is typed and, unless always visible, emitted right
    before the Emit of `user`. Returns its handle; `user` moves up by one.
    """
    emit = find_emit(function.body, user)
    handle = insert_expression(function, user, expr)
    expr.ty = module.intern(infer_type(module, function, handle))
    if emit is not None and not isinstance(expr, ALWAYS_VISIBLE):
        _emit_before(function, handle, emit)
    return handle


def value_before_statement(module: IrModule, function: Function, stmt, expr) -> int:
    """Add `expr` as an input of statement `stmt`, emitted just before it.

    A call result must follow its arguments, so for calls with a result the
    expression is placed below the result instead of at the arena end.
    """
    if isinstance(stmt, Call) and stmt.result is not None:
        handle = insert_expression(function, stmt.result, expr)
    else:
        function.expressions.append(expr)
        handle = len(function.expressions) - 1
    expr.ty = module.intern(infer_type(module, function, handle))
    if not isinstance(expr, ALWAYS_VISIBLE):
        _emit_before(function, handle, stmt)
    return handle


def zero_expression(module: IrModule, ty_handle: int):
    ty = module.types[ty_handle]
    if isinstance(ty, Scalar):
        return Literal({'bool': False, 'i32': 0, 'u32': 0, 'f32': 0.0}[ty.kind], ty.kind)
    return Compose([], ty=ty_handle)


def _same_type(module: IrModule, function: Function, a: int, b: int) -> bool:
    return module.types[function.expressions[a].ty] == module.types[function.expressions[b].ty]


def _still_typed(module: IrModule, function: Function, handles) -> bool:
    """True if every expression in `handles` still infers to its stored type."""
    for h in handles:
        try:
            if infer_type(module, function, h) != module.types[function.expressions[h].ty]:
                return False
        except IrTypeError:
            return False
    return True


def _users(function: Function, handle: int) -> List[int]:
    return [h for h, e in enumerate(function.expressions) if handle in e.operands()]


def _converts(source, target) -> bool:
    """A one-component constructor turns `source` into `target`."""
    if isinstance(source, Scalar) and isinstance(target, Scalar):
        return True
    if isinstance(source, Vector) and isinstance(target, Vector):
        return source.size == target.size
    return isinstance(source, Scalar) and isinstance(target, Vector) and target.element == source


# ============================================================================
# Operators
# ============================================================================

class IrMutator:
    name = ''

    def sites(self, module: IrModule) -> List[tuple]:
        raise NotImplementedError

    def apply_at(self, module: IrModule, site, rng: random.Random) -> Optional[IrModule]:
        raise NotImplementedError

    def apply(self, module: IrModule, rng: random.Random) -> Optional[IrModule]:
        sites = self.sites(module)
        if not sites:
            return None
        return self.apply_at(module, rng.choice(sites), rng)


class Operators(IrMutator):
    """Exchange a unary or binary operator for one with the same result type."""
    name = 'Operators'

    def sites(self, module):
        return [(fi, h) for fi, f in enumerate(module.functions)
                for h, e in enumerate(f.expressions) if isinstance(e, (Unary, Binary))]

    @staticmethod
    def alternatives(module: IrModule, function: Function, handle: int) -> List[str]:
        expr = function.expressions[handle]
        want = module.types[expr.ty]
        original = expr.op
        out = []
        for op in (UNARY_OPS if isinstance(expr, Unary) else BINARY_OPS):
            if op == original:
                continue
            expr.op = op
            try:
                if infer_type(module, function, handle) == want:
                    out.append(op)
            except IrTypeError:
                pass
        expr.op = original
        return out

    def apply_at(self, module, site, rng, choice: Optional[str] = None):
        fi, h = site
        result = module.clone()
        function = result.functions[fi]
        ops = self.alternatives(result, function, h)
        if choice is None:
            if not ops:
                return None
            choice = rng.choice(ops)
        elif choice not in ops:
            return None
        function.expressions[h].op = choice
        return result


class InputReplace(IrMutator):
    """Exchange one input of an expression or statement for another visible
    value of the same type.

    Sites are (function, scope point, field, position); field 'expr' means
    an operand of the expression emitted at that point.
    """
    name = 'InputReplace'

    @staticmethod
    def slots(module: IrModule, function: Function) -> Dict[tuple, Tuple[int, List[int]]]:
        """(point, field, position) -> (current handle, candidate handles)."""
        out = {}

        def add(key, current, visible, bound=None):
            candidates = [h for h in visible
                          if h != current and (bound is None or h < bound)
                          and _same_type(module, function, h, current)]
            if candidates:
                out[key] = (current, candidates)

        for n, point in enumerate(scope_points(function)):
            stmt = point.statement
            visible = point.visible
            if isinstance(stmt, Emit):
                for pos, op in enumerate(function.expressions[stmt.expr].operands()):
                    add((n, 'expr', pos), op, visible, stmt.expr)
            elif isinstance(stmt, Store):
                add((n, 'pointer', 0), stmt.pointer, visible)
                add((n, 'value', 0), stmt.value, visible)
            elif isinstance(stmt, Call):
                for pos, arg in enumerate(stmt.arguments):
                    add((n, 'arguments', pos), arg, visible, stmt.result)
            elif isinstance(stmt, If):
                add((n, 'condition', 0), stmt.condition, visible)
            elif isinstance(stmt, Return) and stmt.value is not None:
                add((n, 'value', 0), stmt.value, visible)
            elif isinstance(stmt, Switch):
                add((n, 'selector', 0), stmt.selector, visible)
            elif isinstance(stmt, Loop) and stmt.break_if is not None:
                add((n, 'break_if', 0), stmt.break_if, visible_after_continuing(stmt, visible))
        return out

    def sites(self, module):
        return [(fi,) + key for fi, f in enumerate(module.functions) for key in self.slots(module, f)]

    def apply_at(self, module, site, rng, replacement: Optional[int] = None):
        fi, n, field, pos = site
        result = module.clone()
        function = result.functions[fi]
        slot = self.slots(result, function).get((n, field, pos))
        if slot is None:
            return None
        _, candidates = slot
        if replacement is None:
            replacement = rng.choice(candidates)
        elif replacement not in candidates:
            return None

        stmt = scope_points(function)[n].statement
        if field == 'expr':
            expr = function.expressions[stmt.expr]
            if isinstance(expr, Compose):
                expr.components[pos] = replacement
            elif isinstance(expr, BuiltinCall):
                expr.args[pos] = replacement
            else:
                setattr(expr, _OPERAND_FIELDS[type(expr)][pos], replacement)
            if not _still_typed(result, function, [stmt.expr]):
                return None
        elif field == 'arguments':
            stmt.arguments[pos] = replacement
        else:
            setattr(stmt, field, replacement)
        return result


class Literals(IrMutator):
    """Replace a literal value with an interesting one of the same kind."""
    name = 'Literals'

    def sites(self, module):
        return [(fi, h) for fi, f in enumerate(module.functions)
                for h, e in enumerate(f.expressions) if isinstance(e, Literal)]

    @staticmethod
    def interesting(kind: str) -> List:
        if kind == 'bool':
            return [False, True]
        pool = INTERESTING_FLOATS if kind == 'f32' else INTERESTING_INTS
        return [v for v in pool if literal_in_range(v, kind)]

    def apply_at(self, module, site, rng, value=None):
        fi, h = site
        result = module.clone()
        function = result.functions[fi]
        literal = function.expressions[h]
        if value is None:
            # repr keeps 0.0 and -0.0 apart
            choices = [v for v in self.interesting(literal.kind) if repr(v) != repr(literal.value)]
            if not choices:
                return None
            value = rng.choice(choices)
        if not literal_in_range(value, literal.kind):
            return None
        literal.value = value
        if not _still_typed(result, function, _users(function, h)):
            return None
        return result


class Builtins(IrMutator):
    """Exchange a builtin call for another builtin.

    Builtins with the same signature are swapped directly. Otherwise a
    builtin accepting the same arguments is called and its result converted
    back to the original type.
    """
    name = 'Built-ins'

    def sites(self, module):
        return [(fi, h) for fi, f in enumerate(module.functions)
                for h, e in enumerate(f.expressions)
                if isinstance(e, BuiltinCall) and e.name not in POINTER_BUILTINS]

    @staticmethod
    def converting(module: IrModule, function: Function, handle: int) -> List[str]:
        expr = function.expressions[handle]
        shapes = [shape_of(module.types[function.expressions[a].ty]) for a in expr.args]
        target = module.types[expr.ty]
        out = []
        for other in sorted(BUILTINS):
            if other == expr.name:
                continue
            shape = builtin_result(other, shapes)
            if shape is None:
                continue
            produced = type_of_shape(shape)
            if produced != target and _converts(produced, target):
                out.append(other)
        return out

    def apply_at(self, module, site, rng, name: Optional[str] = None):
        fi, h = site
        result = module.clone()
        function = result.functions[fi]
        expr = function.expressions[h]
        shapes = [shape_of(result.types[function.expressions[a].ty]) for a in expr.args]
        compatible = compatible_builtins(expr.name, shapes)
        converting = self.converting(result, function, h)
        if name is None:
            if compatible and (not converting or rng.random() < 0.7):
                name = rng.choice(compatible)
            elif converting:
                name = rng.choice(converting)
            else:
                return None
        if name in compatible:
            expr.name = name
            return result
        if name not in converting:
            return None
        call = insert_before_user(result, function, h, BuiltinCall(name, list(expr.args)))
        function.expressions[call + 1] = Compose([call], ty=expr.ty)
        return result


class Types(IrMutator):
    """Change a type and repair everything that depends on it.

    Variants: resize a fixed-size array type, change the scalar type of a
    local variable, add a parameter to a helper function, change the type of
    a helper parameter. Signature changes update every call site.
    """
    name = 'Types'

    def sites(self, module):
        out = []
        for th, ty in enumerate(module.types):
            if isinstance(ty, Array) and ty.length is not None and self._lengths(module, th):
                out.append(('array', th, None))
        for fi, f in enumerate(module.functions):
            for li, local in enumerate(f.locals):
                if isinstance(module.types[local.ty], Scalar):
                    out.append(('local', fi, li))
            if f.is_entry_point:
                continue
            out.append(('add_param', fi, None))
            for k, p in enumerate(f.params):
                if isinstance(module.types[p.ty], (Scalar, Vector)):
                    out.append(('param', fi, k))
        return out

    def apply_at(self, module, site, rng):
        kind, a, b = site
        if kind == 'array':
            return self.resize_array(module, a, rng)
        if kind == 'local':
            return self.retype_local(module, a, b, rng)
        if kind == 'add_param':
            return self.add_parameter(module, a, rng)
        return self.retype_parameter(module, a, b, rng)

    @staticmethod
    def _lengths(module: IrModule, th: int) -> List[int]:
        element = module.types[th].element
        return [n for n in range(1, MAX_ARRAY_LENGTH + 1) if Array(element, n) not in module.types]

    # ------------------------------------------------------------------

    def resize_array(self, module: IrModule, th: int, rng: random.Random,
                     length: Optional[int] = None) -> Optional[IrModule]:
        """Give array type `th` a new length; constructors are padded with
        zero values or truncated, constant indices are clamped."""
        lengths = self._lengths(module, th)
        if length is None:
            if not lengths:
                return None
            length = rng.choice(lengths)
        elif length not in lengths:
            return None
        result = module.clone()
        element = result.types[th].element
        result.types[th] = Array(element, length)

        for function in result.functions:
            for e in function.expressions:
                if not isinstance(e, AccessIndex):
                    continue
                base = result.types[function.expressions[e.base].ty]
                target = base.pointee if isinstance(base, Pointer) else function.expressions[e.base].ty
                if target == th and e.index >= length:
                    e.index = length - 1
            composes = [h for h, e in enumerate(function.expressions)
                        if isinstance(e, Compose) and e.ty == th and e.components]
            for h in reversed(composes):
                compose = function.expressions[h]
                del compose.components[length:]
                while len(compose.components) < length:
                    pad = insert_before_user(result, function, h, zero_expression(result, element))
                    h += 1
                    compose.components.append(pad)
        return result

    def retype_local(self, module: IrModule, fi: int, li: int, rng: random.Random,
                     kind: Optional[str] = None) -> Optional[IrModule]:
        """Change a scalar local's type; loads convert back, stores convert in."""
        result = module.clone()
        function = result.functions[fi]
        local = function.locals[li]
        old_ty = local.ty
        old = result.types[old_ty]
        if kind is None:
            kind = rng.choice([k for k in SCALAR_KINDS if k != old.kind])
        elif kind == old.kind:
            return None
        new_ty = result.intern(Scalar(kind))
        local.ty = new_ty
        pointer_ty = result.intern(Pointer('function', new_ty))
        pointers = set()
        for h, e in enumerate(function.expressions):
            if isinstance(e, LocalVariable) and e.index == li:
                e.ty = pointer_ty
                pointers.add(h)

        loads = [h for h, e in enumerate(function.expressions)
                 if isinstance(e, Load) and e.pointer in pointers]
        for h in reversed(loads):
            load = insert_before_user(result, function, h, Load(function.expressions[h].pointer))
            function.expressions[load + 1] = Compose([load], ty=old_ty)

        for stmt in iter_statements(function.body):
            if isinstance(stmt, Store):
                target = function.expressions[stmt.pointer]
                if isinstance(target, LocalVariable) and target.index == li:
                    stmt.value = value_before_statement(result, function, stmt,
                                                        Compose([stmt.value], ty=new_ty))
        return result

    def add_parameter(self, module: IrModule, fi: int, rng: random.Random,
                      ty: Optional[int] = None) -> Optional[IrModule]:
        """Append a parameter; every call site passes a value of its type."""
        result = module.clone()
        function = result.functions[fi]
        if function.is_entry_point:
            return None
        if ty is None:
            pool = constructible_types(result)
            simple = [h for h in pool if isinstance(result.types[h], (Scalar, Vector))]
            ty = rng.choice(simple if simple and rng.random() < 0.7 else pool)
        taken = {p.name for p in function.params} | {v.name for v in function.locals}
        k = len(function.params)
        name = f"p{k}"
        while name in taken:
            name += '_'
        function.params.append(FunctionParam(name, ty))
        add_typed(result, function, FunctionArgument(k))

        for caller in result.functions[fi + 1:]:
            for stmt in iter_statements(caller.body):
                if isinstance(stmt, Call) and stmt.function == fi:
                    stmt.arguments.append(self._argument(result, caller, stmt, ty, rng))
        return result

    @staticmethod
    def _argument(module: IrModule, caller: Function, stmt: Call, ty: int, rng: random.Random) -> int:
        point = next(p for p in scope_points(caller) if p.statement is stmt)
        want = module.types[ty]
        candidates = [h for h in point.visible
                      if module.types[caller.expressions[h].ty] == want
                      and (stmt.result is None or h < stmt.result)]
        if candidates and rng.random() < 0.7:
            return rng.choice(candidates)
        return value_before_statement(module, caller, stmt, zero_expression(module, ty))

    def retype_parameter(self, module: IrModule, fi: int, k: int, rng: random.Random,
                         ty=None) -> Optional[IrModule]:
        """Change a scalar or vector parameter's type.

        Inside the function the argument is converted back to the old type
        once, at the top of the body; call sites convert their argument.
        """
        result = module.clone()
        function = result.functions[fi]
        if function.is_entry_point:
            return None
        param = function.params[k]
        old_ty = param.ty
        old = result.types[old_ty]
        if isinstance(old, Scalar):
            options = [Scalar(kind) for kind in SCALAR_KINDS if kind != old.kind]
        elif isinstance(old, Vector):
            options = [Vector(old.size, Scalar(kind)) for kind in SCALAR_KINDS if kind != old.element.kind]
        else:
            return None
        if ty is None:
            ty = rng.choice(options)
        elif ty not in options:
            return None
        new_ty = result.intern(ty)
        param.ty = new_ty

        arguments = [h for h, e in enumerate(function.expressions)
                     if isinstance(e, FunctionArgument) and e.index == k]
        for a in reversed(arguments):
            function.expressions[a].ty = new_ty
            conversion = insert_expression(function, a + 1, Compose([a], ty=old_ty))
            replace_uses(function, a, conversion, skip={conversion})
            function.body.insert(0, Emit(conversion))

        for caller in result.functions[fi + 1:]:
            for stmt in iter_statements(caller.body):
                if isinstance(stmt, Call) and stmt.function == fi:
                    old_arg = stmt.arguments[k]
                    stmt.arguments[k] = value_before_statement(result, caller, stmt,
                                                               Compose([old_arg], ty=new_ty))
        return result


class CodeGen(IrMutator):
    """Generate a few new statements at a random position of a function."""
    name = 'CodeGen'

    def sites(self, module):
        out = []
        for fi, f in enumerate(module.functions):
            for n, point in enumerate(scope_points(f)):
                # nothing after a jump
                if point.index > 0 and isinstance(point.block[point.index - 1], _TERMINATORS):
                    continue
                out.append((fi, n))
        return out

    def apply_at(self, module, site, rng, count: Optional[int] = None):
        fi, n = site
        result = module.clone()
        for kind in SCALAR_KINDS:
            result.intern(Scalar(kind))
        point = scope_points(result.functions[fi])[n]
        limits = GenerationLimits(max_statements=count or rng.randint(1, 3))
        builder = BodyBuilder(result, fi, rng, limits)
        sink: List = []
        visible = list(point.visible)
        failures = 0
        while builder.remaining > 0 and failures < limits.stall_limit:
            if not builder.statement(sink, visible, point.depth, point.flow):
                failures += 1
        if not sink:
            return None
        point.block[point.index:point.index] = sink
        return result


IR_MUTATORS = (Operators(), InputReplace(), Literals(), Builtins(), Types(), CodeGen())
IR_OPERATOR_NAMES = tuple(m.name for m in IR_MUTATORS)
_BY_NAME = {m.name: m for m in IR_MUTATORS}


def get_ir_mutator(name: str) -> IrMutator:
    try:
        return _BY_NAME[name]
    except KeyError:
        raise ValueError(f"unknown IR operator '{name}' (expected one of {', '.join(IR_OPERATOR_NAMES)})")


def _weighted_order(rng: random.Random, weights: Optional[Mapping[str, float]]) -> List[IrMutator]:
    pool = list(IR_MUTATORS)
    if not weights:
        rng.shuffle(pool)
        return pool
    order = []
    while pool:
        w = [max(0.0, float(weights.get(m.name, 0.0))) for m in pool]
        if sum(w) <= 0:
            rng.shuffle(pool)
            order.extend(pool)
            break
        order.append(pool.pop(rng.choices(range(len(pool)), w)[0]))
    return order


def mutate_ir(module: IrModule, rng: random.Random, weights: Optional[Mapping[str, float]] = None,
              operator: Optional[str] = None, strict: bool = False) -> MutationResult:
    """Apply one IR mutation.

    Args:
        module: Well-formed input module (not modified)
        rng: Campaign RNG
        weights: Operator name -> weight for picking the first operator
        operator: Operator to try first; overrides weights
        strict: Do not fall back to other operators

    Returns:
        MutationResult whose ``tree`` is the mutated module; ``applied`` is
        False (and the input returned) when no operator found a site that
        yields a well-formed module.
    """
    if operator is None:
        order = _weighted_order(rng, weights)
    else:
        first = get_ir_mutator(operator)
        rest = [m for m in IR_MUTATORS if m is not first]
        rng.shuffle(rest)
        order = [first] + ([] if strict else rest)

    for mutator in order:
        sites = mutator.sites(module)
        if not sites:
            continue
        for _ in range(IR_MUTATION_RETRIES):
            try:
                out = mutator.apply_at(module, rng.choice(sites), rng)
            except IrTypeError as e:
                log_debug(None, 'IrMutator', f"{mutator.name} rejected: {e}")
                continue
            if out is not None and is_well_formed(out):
                return MutationResult(out, mutator.name, True)
    return MutationResult(module, order[0].name if order else '', False)
