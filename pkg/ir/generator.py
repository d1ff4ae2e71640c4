"""
Random IR program generator.

Construction follows a fixed order: a pool of scalar types, random vector /
matrix / array / struct types drawn from that pool, global variables,
function prototypes (helpers first, the entry point last) and finally the
function bodies. Bodies are sampled statement by statement; whenever an
input of a required type cannot be produced the candidate statement is
discarded and another one is tried. After too many discarded candidates a
function is closed early, so generation always terminates.

``BodyBuilder`` is also the statement sampler of the CodeGen mutation,
which uses it on an existing function at a given insertion point.
"""

import random
from dataclasses import dataclass
from typing import List, Optional

from config.config import (
    DEFAULT_MAX_TYPES, DEFAULT_MAX_FUNCTIONS, DEFAULT_MAX_STATEMENTS,
    DEFAULT_MAX_GLOBALS, MAX_ARRAY_LENGTH, MAX_BLOCK_DEPTH, GENERATION_STALL_LIMIT,
)
from ir.audit import audit_module
from ir.builtins import BUILTINS, ARITY, Shape
from ir.module import (
    IrModule, Function, FunctionParam, FunctionResult, LocalVar, GlobalVar, Binding,
    IrTypeError, FunctionArgument, LocalVariable, GlobalVariable, Literal, Compose,
    AccessIndex, Access, Unary, Binary, CallResult, BuiltinCall, Load,
    Emit, Store, Call, If, Loop, Break, Continue, Return, Switch, SwitchCase,
    ARITHMETIC_OPS, BITWISE_OPS, SHIFT_OPS, EQUALITY_OPS, ORDER_OPS, LOGICAL_OPS,
    minimal_module,
)
from ir.scope import Flow
from ir.types import (
    SCALAR_KINDS, Scalar, Vector, Matrix, Array, Struct, StructMember, Pointer,
    BOOL, I32, U32, F32, scalar_of, with_scalar,
)
from ir.typing import add_typed, is_constructible, is_host_shareable, type_of_shape, zero_value
from util.log_utils import log_warning

STAGE_WEIGHTS = (('compute', 4), ('vertex', 1), ('fragment', 1))

# statement kind -> weight
STATEMENT_WEIGHTS = (('let', 6), ('store', 3), ('call', 2), ('if', 2), ('loop', 1), ('switch', 1))
EXPRESSION_BUILDERS = ('binary', 'binary', 'compare', 'unary', 'builtin', 'load', 'access', 'compose')

SMALL_I32 = (0, 1, -1, 2, 3, 7, 10, 42, -8, 100, 255, -1000)
SMALL_U32 = (0, 1, 2, 3, 5, 8, 16, 31, 100, 255, 1000)
SMALL_F32 = (0.0, 0.5, 1.0, 2.0, -1.0, 0.25, 3.5, 10.0, -0.75, 100.0)

# every shape a builtin argument can take
_ALL_SHAPES = tuple(
    [Shape('scalar', 1, 1, k) for k in SCALAR_KINDS]
    + [Shape('vector', n, 1, k) for n in (2, 3, 4) for k in SCALAR_KINDS]
    + [Shape('matrix', c, r, 'f32') for c in (2, 3, 4) for r in (2, 3, 4)]
)


@dataclass
class GenerationLimits:
    """Bounds of one generated module."""
    max_types: int = DEFAULT_MAX_TYPES  # types beyond the scalar pool
    max_functions: int = DEFAULT_MAX_FUNCTIONS
    max_statements: int = DEFAULT_MAX_STATEMENTS  # per function
    max_globals: int = DEFAULT_MAX_GLOBALS
    max_block_depth: int = MAX_BLOCK_DEPTH
    stall_limit: int = GENERATION_STALL_LIMIT


def random_literal(rng: random.Random, kind: str):
    if kind == 'bool':
        return rng.random() < 0.5
    if kind == 'i32':
        return rng.choice(SMALL_I32)
    if kind == 'u32':
        return rng.choice(SMALL_U32)
    return rng.choice(SMALL_F32)


def _weighted(rng: random.Random, pairs):
    names = [n for n, _ in pairs]
    weights = [w for _, w in pairs]
    return rng.choices(names, weights)[0]


def constructible_types(module: IrModule) -> List[int]:
    return [h for h, t in enumerate(module.types)
            if not isinstance(t, Pointer) and is_constructible(module, t)]


# ============================================================================
# Module skeleton
# ============================================================================

def _next_struct_name(module: IrModule) -> str:
    return f"S{len(module.struct_handles())}"


def _extend_types(module: IrModule, rng: random.Random, count: int):
    for _ in range(count):
        pool = constructible_types(module)
        kind = rng.choice(('vector', 'vector', 'matrix', 'array', 'struct'))
        if kind == 'vector':
            ty = Vector(rng.randint(2, 4), Scalar(rng.choice(SCALAR_KINDS)))
        elif kind == 'matrix':
            ty = Matrix(rng.randint(2, 4), rng.randint(2, 4))
        elif kind == 'array':
            ty = Array(rng.choice(pool), rng.randint(1, MAX_ARRAY_LENGTH))
        else:
            members = tuple(StructMember(f"m{i}", rng.choice(pool)) for i in range(rng.randint(1, 4)))
            ty = Struct(_next_struct_name(module), members)
        module.intern(ty)


def _storage_type(module: IrModule, rng: random.Random) -> int:
    shareable = [h for h in constructible_types(module) if is_host_shareable(module, module.types[h])]
    scalars = [h for h in shareable if isinstance(module.types[h], (Scalar, Vector))]
    if rng.random() < 0.5 and scalars:
        runtime = module.intern(Array(rng.choice(scalars), None))
        members = (StructMember('m0', rng.choice(shareable)), StructMember('m1', runtime))
        return module.intern(Struct(_next_struct_name(module), members))
    return rng.choice(shareable) if shareable else module.intern(F32)


def _make_globals(module: IrModule, rng: random.Random, limits: GenerationLimits, allow_storage: bool):
    binding = 0
    for i in range(rng.randint(0, limits.max_globals)):
        if allow_storage and rng.random() < 0.4:
            ty = _storage_type(module, rng)
            module.globals.append(GlobalVar(f"g{i}", ty, 'storage', 0, binding))
            binding += 1
        else:
            module.globals.append(GlobalVar(f"g{i}", rng.choice(constructible_types(module)), 'private'))


def _entry_prototype(module: IrModule, rng: random.Random, name: str, stage: str,
                     with_params: bool) -> Function:
    params = []

    def param(ty, binding):
        params.append(FunctionParam(f"p{len(params)}", ty, binding))

    if stage == 'compute':
        if with_params and rng.random() < 0.5:
            param(module.intern(Vector(3, U32)), Binding(builtin='global_invocation_id'))
        if with_params and rng.random() < 0.3:
            param(module.intern(U32), Binding(builtin='local_invocation_index'))
        size = rng.choice(((1, 1, 1), (64, 1, 1), (8, 8, 1), (4, 4, 4), (16, 1, 1)))
        return Function(name, params, None, stage=stage, workgroup_size=size)
    vec4 = module.intern(Vector(4, F32))
    if stage == 'vertex':
        if with_params and rng.random() < 0.5:
            param(module.intern(U32), Binding(builtin='vertex_index'))
        if with_params and rng.random() < 0.5:
            param(vec4, Binding(location=0))
        return Function(name, params, FunctionResult(vec4, Binding(builtin='position')), stage=stage)
    if with_params and rng.random() < 0.5:
        param(vec4, Binding(location=0))
    if with_params and rng.random() < 0.3:
        param(module.intern(BOOL), Binding(builtin='front_facing'))
    return Function(name, params, FunctionResult(vec4, Binding(location=0)), stage=stage)


def _prototypes(module: IrModule, rng: random.Random, limits: GenerationLimits, stage: str):
    count = rng.randint(1, max(1, limits.max_functions))
    pool = constructible_types(module)
    simple = [h for h in pool if isinstance(module.types[h], (Scalar, Vector))]
    for i in range(count - 1):
        params = [FunctionParam(f"p{k}", rng.choice(simple if rng.random() < 0.7 else pool))
                  for k in range(rng.randint(0, 3))]
        result = None if rng.random() < 0.3 else FunctionResult(rng.choice(simple if rng.random() < 0.7 else pool))
        module.functions.append(Function(f"f{i}", params, result))
    module.functions.append(_entry_prototype(module, rng, f"f{count - 1}", stage, limits.max_statements > 0))


# ============================================================================
# Bodies
# ============================================================================

class BodyBuilder:
    """Samples statements and expressions for one function.

    Statements go into a `sink` list; expressions they need are appended to
    the function's arena and emitted into the same sink first. `visible` is
    the ordered list of value handles usable at the current position and is
    extended as statements are added.
    """

    def __init__(self, module: IrModule, function_index: int, rng: random.Random,
                 limits: Optional[GenerationLimits] = None):
        self.module = module
        self.index = function_index
        self.function = module.functions[function_index]
        self.rng = rng
        self.limits = limits or GenerationLimits()
        self.remaining = self.limits.max_statements
        self.pointers = [h for h, e in enumerate(self.function.expressions)
                         if isinstance(e, (LocalVariable, GlobalVariable))]
        self.callable = [i for i in range(function_index)
                         if not module.functions[i].is_entry_point]

    # ------------------------------------------------------------------
    # bookkeeping
    # ------------------------------------------------------------------

    def _mark(self, sink, visible):
        return len(self.function.expressions), len(sink), len(visible), self.remaining

    def _rollback(self, mark, sink, visible):
        n_expr, n_sink, n_vis, remaining = mark
        del self.function.expressions[n_expr:]
        del sink[n_sink:]
        del visible[n_vis:]
        self.remaining = remaining

    def _ty(self, handle: int):
        return self.module.types[self.function.expressions[handle].ty]

    def _add(self, expr) -> int:
        return add_typed(self.module, self.function, expr)

    def _emit(self, sink, visible, handle: int) -> int:
        sink.append(Emit(handle))
        visible.append(handle)
        return handle

    def _value_types(self, kinds=SCALAR_KINDS, matrices: bool = False) -> List[int]:
        out = []
        for h, t in enumerate(self.module.types):
            s = scalar_of(t)
            if s is not None and s.kind in kinds:
                out.append(h)
            elif matrices and isinstance(t, Matrix):
                out.append(h)
        return out

    def _pointee(self, pointer: int):
        return self.module.types[self._ty(pointer).pointee]

    # ------------------------------------------------------------------
    # values
    # ------------------------------------------------------------------

    def literal(self, kind: str) -> int:
        return self._add(Literal(random_literal(self.rng, kind), kind))

    def value(self, sink, visible, ty_handle: int, depth: int = 0) -> Optional[int]:
        """A handle of type `ty_handle` usable here, or None."""
        ty = self.module.types[ty_handle]
        if isinstance(ty, Pointer) or not is_constructible(self.module, ty):
            return None
        rng = self.rng
        matches = [h for h in visible if self._ty(h) == ty]
        if matches and rng.random() < 0.75:
            return rng.choice(matches)
        loads = [p for p in self.pointers if self._pointee(p) == ty]
        if loads and rng.random() < (0.3 if isinstance(ty, Scalar) else 0.5):
            return self._emit(sink, visible, self._add(Load(rng.choice(loads))))
        if isinstance(ty, Scalar):
            return self.literal(ty.kind)
        if depth >= 2 or (isinstance(ty, Array) and ty.length > 4) or rng.random() < 0.15:
            return self._emit(sink, visible, self._add(Compose([], ty=ty_handle)))
        if isinstance(ty, Vector):
            element = self.module.intern(ty.element)
            count = 1 if rng.random() < 0.3 else ty.size
            parts = [self.value(sink, visible, element, depth + 1) for _ in range(count)]
        elif isinstance(ty, Matrix):
            column = self.module.intern(Vector(ty.rows, ty.element))
            parts = [self.value(sink, visible, column, depth + 1) for _ in range(ty.columns)]
        elif isinstance(ty, Array):
            parts = [self.value(sink, visible, ty.element, depth + 1) for _ in range(ty.length)]
        else:
            parts = [self.value(sink, visible, m.ty, depth + 1) for m in ty.members]
        if any(p is None for p in parts):
            return None
        return self._emit(sink, visible, self._add(Compose(parts, ty=ty_handle)))

    def condition(self, sink, visible) -> Optional[int]:
        if self.rng.random() < 0.6:
            handle = self.expr_compare(sink, visible, scalar_only=True)
            if handle is not None:
                return self._emit(sink, visible, handle)
        return self.value(sink, visible, self.module.intern(BOOL))

    def pointer_path(self, sink, visible, pointer: int, steps: int) -> int:
        """Descend into `pointer` by up to `steps` accesses (more if not loadable)."""
        rng = self.rng
        while True:
            pointee = self._pointee(pointer)
            forced = not is_constructible(self.module, pointee)
            if isinstance(pointee, Scalar) or (steps <= 0 and not forced):
                return pointer
            steps -= 1
            if isinstance(pointee, Struct):
                access = AccessIndex(pointer, rng.randrange(len(pointee.members)))
            else:
                bound = {Vector: 'size', Matrix: 'columns'}
                if isinstance(pointee, Array):
                    length = pointee.length if pointee.length is not None else 4
                else:
                    length = getattr(pointee, bound[type(pointee)])
                indices = [h for h in visible if self._ty(h) in (I32, U32)]
                if indices and rng.random() < 0.4:
                    access = Access(pointer, rng.choice(indices))
                else:
                    access = AccessIndex(pointer, rng.randrange(length))
            pointer = self._emit(sink, visible, self._add(access))

    # ------------------------------------------------------------------
    # expressions (return a fresh, not yet emitted handle)
    # ------------------------------------------------------------------

    def expr_binary(self, sink, visible) -> Optional[int]:
        rng = self.rng
        ty = rng.choice(self._value_types(('i32', 'u32', 'f32'), matrices=True))
        t = self.module.types[ty]
        if isinstance(t, Matrix):
            op = rng.choice(('add', 'sub', 'mul', 'mul'))
            left = self.value(sink, visible, ty)
            if op == 'mul':
                other = self.module.intern(Vector(t.columns, F32) if rng.random() < 0.6 else F32)
                right = self.value(sink, visible, other)
            else:
                right = self.value(sink, visible, ty)
        else:
            kind = scalar_of(t).kind
            ops = ARITHMETIC_OPS + (BITWISE_OPS + SHIFT_OPS if kind != 'f32' else ())
            op = rng.choice(ops)
            left = self.value(sink, visible, ty)
            if op in SHIFT_OPS:
                amount = self.module.intern(with_scalar(t, U32))
                if isinstance(t, Scalar) and rng.random() < 0.6:
                    right = self._add(Literal(rng.randint(0, 31), 'u32'))
                else:
                    right = self.value(sink, visible, amount)
            elif op in ARITHMETIC_OPS and isinstance(t, Vector) and rng.random() < 0.2:
                right = self.value(sink, visible, self.module.intern(t.element))
            else:
                right = self.value(sink, visible, ty)
            if right is not None and op in ('div', 'mod') and kind != 'f32':
                divisor = self.function.expressions[right]
                if isinstance(divisor, Literal) and divisor.value == 0:
                    right = self._add(Literal(1, kind))
        if left is None or right is None:
            return None
        return self._add(Binary(op, left, right))

    def expr_compare(self, sink, visible, scalar_only: bool = False) -> Optional[int]:
        rng = self.rng
        if rng.random() < 0.15:
            left = self.value(sink, visible, self.module.intern(BOOL))
            right = self.value(sink, visible, self.module.intern(BOOL))
            if left is None or right is None:
                return None
            return self._add(Binary(rng.choice(LOGICAL_OPS), left, right))
        types = self._value_types()
        if scalar_only:
            types = [h for h in types if isinstance(self.module.types[h], Scalar)]
        ty = rng.choice(types)
        kind = scalar_of(self.module.types[ty]).kind
        op = rng.choice(EQUALITY_OPS if kind == 'bool' else EQUALITY_OPS + ORDER_OPS + ORDER_OPS)
        left = self.value(sink, visible, ty)
        right = self.value(sink, visible, ty)
        if left is None or right is None:
            return None
        return self._add(Binary(op, left, right))

    def expr_unary(self, sink, visible) -> Optional[int]:
        ty = self.rng.choice(self._value_types())
        kind = scalar_of(self.module.types[ty]).kind
        op = self.rng.choice({'f32': ('neg',), 'i32': ('neg', 'bitnot'),
                              'u32': ('bitnot',), 'bool': ('not',)}[kind])
        operand = self.value(sink, visible, ty)
        if operand is None:
            return None
        return self._add(Unary(op, operand))

    def expr_builtin(self, sink, visible) -> Optional[int]:
        rng = self.rng
        if rng.random() < 0.1:
            handle = self._array_length(sink, visible)
            if handle is not None:
                return handle
        name = rng.choice(sorted(BUILTINS))
        arity = ARITY.get(name, 1)
        bool_shape = Shape('scalar', 1, 1, 'bool')
        fits = []
        for shape in _ALL_SHAPES:
            args = [shape, shape, bool_shape] if name == 'select' else [shape] * arity
            if BUILTINS[name](args) is not None:
                fits.append(args)
        if not fits:
            return None
        args = []
        for shape in rng.choice(fits):
            handle = self.value(sink, visible, self.module.intern(type_of_shape(shape)))
            if handle is None:
                return None
            args.append(handle)
        return self._add(BuiltinCall(name, args))

    def _array_length(self, sink, visible) -> Optional[int]:
        for p in self.pointers:
            ty = self._ty(p)
            if ty.space != 'storage':
                continue
            pointee = self.module.types[ty.pointee]
            if isinstance(pointee, Array) and pointee.length is None:
                return self._add(BuiltinCall('arrayLength', [p]))
            if isinstance(pointee, Struct):
                last = self.module.types[pointee.members[-1].ty]
                if isinstance(last, Array) and last.length is None:
                    member = self._emit(sink, visible, self._add(AccessIndex(p, len(pointee.members) - 1)))
                    return self._add(BuiltinCall('arrayLength', [member]))
        return None

    def expr_load(self, sink, visible) -> Optional[int]:
        if not self.pointers:
            return None
        pointer = self.pointer_path(sink, visible, self.rng.choice(self.pointers), self.rng.randint(0, 2))
        return self._add(Load(pointer))

    def expr_access(self, sink, visible) -> Optional[int]:
        rng = self.rng
        bases = [h for h in visible
                 if isinstance(self._ty(h), (Vector, Matrix, Struct))
                 or (isinstance(self._ty(h), Array) and self._ty(h).length is not None)]
        if not bases:
            return None
        base = rng.choice(bases)
        ty = self._ty(base)
        if isinstance(ty, Struct):
            return self._add(AccessIndex(base, rng.randrange(len(ty.members))))
        bound = ty.length if isinstance(ty, Array) else (ty.size if isinstance(ty, Vector) else ty.columns)
        indices = [h for h in visible if self._ty(h) in (I32, U32)]
        if indices and not isinstance(ty, Array) and rng.random() < 0.4:
            return self._add(Access(base, rng.choice(indices)))
        return self._add(AccessIndex(base, rng.randrange(bound)))

    def expr_compose(self, sink, visible) -> Optional[int]:
        rng = self.rng
        composites = [h for h in constructible_types(self.module)
                      if isinstance(self.module.types[h], (Vector, Matrix, Array, Struct))]
        if not composites:
            return None
        ty_handle = rng.choice(composites)
        ty = self.module.types[ty_handle]
        if isinstance(ty, Vector) and rng.random() < 0.3:
            other = rng.choice([k for k in SCALAR_KINDS if k != ty.element.kind])
            source = self.value(sink, visible, self.module.intern(Vector(ty.size, Scalar(other))))
            return None if source is None else self._add(Compose([source], ty=ty_handle))
        if isinstance(ty, Scalar):
            return None
        before = len(sink)
        handle = self.value(sink, visible, ty_handle, depth=1)
        # value() may reuse or emit; only a freshly emitted compose is split off
        if handle is None or len(sink) == before or not isinstance(sink[-1], Emit) \
                or sink[-1].expr != handle or not isinstance(self.function.expressions[handle], Compose):
            return None
        sink.pop()
        visible.remove(handle)
        return handle

    # ------------------------------------------------------------------
    # statements
    # ------------------------------------------------------------------

    def statement(self, sink, visible, depth: int, flow: Flow) -> bool:
        """Try to add one statement; on failure nothing is left behind."""
        choices = [(k, w) for k, w in STATEMENT_WEIGHTS
                   if (k != 'call' or self.callable)
                   and (k not in ('if', 'loop', 'switch') or depth < self.limits.max_block_depth)
                   and not (flow.in_continuing and k in ('if', 'loop', 'switch', 'call'))]
        kind = _weighted(self.rng, choices)
        mark = self._mark(sink, visible)
        try:
            ok = getattr(self, f"stmt_{kind}")(sink, visible, depth, flow)
        except IrTypeError:
            ok = False
        if not ok:
            self._rollback(mark, sink, visible)
            return False
        self.remaining -= 1
        return True

    def stmt_let(self, sink, visible, depth, flow) -> bool:
        builder = self.rng.choice(EXPRESSION_BUILDERS)
        handle = getattr(self, f"expr_{builder}")(sink, visible)
        if handle is None:
            return False
        self._emit(sink, visible, handle)
        return True

    def stmt_store(self, sink, visible, depth, flow) -> bool:
        if not self.pointers:
            return False
        pointer = self.pointer_path(sink, visible, self.rng.choice(self.pointers), self.rng.randint(0, 2))
        pointee = self._ty(pointer).pointee
        value = self.value(sink, visible, pointee)
        if value is None:
            return False
        sink.append(Store(pointer, value))
        return True

    def stmt_call(self, sink, visible, depth, flow) -> bool:
        callee_index = self.rng.choice(self.callable)
        callee = self.module.functions[callee_index]
        args = []
        for p in callee.params:
            handle = self.value(sink, visible, p.ty)
            if handle is None:
                return False
            args.append(handle)
        if callee.result is None:
            sink.append(Call(callee_index, args))
            return True
        result = self._add(CallResult(callee_index))
        sink.append(Call(callee_index, args, result))
        visible.append(result)
        return True

    def nested(self, block, visible, depth: int, flow: Flow):
        """Fill a nested block with a few statements and maybe a jump."""
        for _ in range(self.rng.randint(0, 3)):
            if self.remaining <= 0:
                break
            self.statement(block, visible, depth, flow)
        if flow.in_continuing:
            return
        roll = self.rng.random()
        if (flow.in_loop or flow.in_switch) and roll < 0.25:
            block.append(Break())
        elif flow.in_loop and not flow.in_switch and roll < 0.35:
            block.append(Continue())
        elif self.function.result is not None and roll > 0.9:
            value = self.value(block, visible, self.function.result.ty)
            if value is not None:
                block.append(Return(value))

    def stmt_if(self, sink, visible, depth, flow) -> bool:
        cond = self.condition(sink, visible)
        if cond is None:
            return False
        accept, reject = [], []
        self.nested(accept, list(visible), depth + 1, flow)
        if self.rng.random() < 0.5:
            self.nested(reject, list(visible), depth + 1, flow)
        sink.append(If(cond, accept, reject))
        return True

    def stmt_loop(self, sink, visible, depth, flow) -> bool:
        body, continuing = [], []
        self.nested(body, list(visible), depth + 1, Flow(in_loop=True))
        entry = list(visible)
        if self.rng.random() < 0.3:
            self.nested(continuing, entry, depth + 1, Flow(True, False, True))
        cond = self.condition(continuing, entry)
        if cond is None:
            return False
        sink.append(Loop(body, continuing, cond))
        return True

    def stmt_switch(self, sink, visible, depth, flow) -> bool:
        rng = self.rng
        selector_ty = self.module.intern(rng.choice((I32, U32)))
        selector = self.value(sink, visible, selector_ty)
        if selector is None:
            return False
        kind = self._ty(selector).kind
        pool = range(-4, 9) if kind == 'i32' else range(0, 12)
        values = rng.sample(list(pool), rng.randint(1, 3))
        inner = Flow(flow.in_loop, True, False)
        cases = []
        for v in values:
            body = []
            self.nested(body, list(visible), depth + 1, inner)
            cases.append(SwitchCase([v], False, body))
        if rng.random() < 0.3:
            cases[-1].default = True
        else:
            body = []
            self.nested(body, list(visible), depth + 1, inner)
            cases.append(SwitchCase([], True, body))
        sink.append(Switch(selector, cases))
        return True

    # ------------------------------------------------------------------

    def prepare(self) -> List[int]:
        """Create argument / variable expressions; returns the visible handles."""
        f = self.function
        visible = []
        for i in range(len(f.params)):
            visible.append(self._add(FunctionArgument(i)))
        for i in range(len(f.locals)):
            self.pointers.append(self._add(LocalVariable(i)))
        for i in range(len(self.module.globals)):
            self.pointers.append(self._add(GlobalVariable(i)))
        return visible

    def fill(self):
        """Generate the whole body of a fresh (empty) function."""
        f = self.function
        rng = self.rng
        if self.limits.max_statements > 0:
            pool = constructible_types(self.module)
            f.locals = [LocalVar(f"v{i}", rng.choice(pool)) for i in range(rng.randint(0, 3))]
        visible = self.prepare()
        failures = 0
        while self.remaining > 0 and failures < self.limits.stall_limit:
            if not self.statement(f.body, visible, 0, Flow()):
                failures += 1
        if f.result is not None:
            value = self.value(f.body, visible, f.result.ty)
            if value is None:
                value = zero_value(self.module, f, f.result.ty)
                if not isinstance(f.expressions[value], Literal):
                    f.body.append(Emit(value))
            f.body.append(Return(value))


def generate_module(rng: random.Random, limits: Optional[GenerationLimits] = None) -> IrModule:
    """Generate a well-formed module.

    Args:
        rng: Seeded generator; equal seeds give identical modules
        limits: Size bounds (defaults from config)

    Returns:
        A module passing the audit, or the minimal fallback module when
        sampling produced something the audit rejects
    """
    limits = limits or GenerationLimits()
    module = IrModule()
    for kind in SCALAR_KINDS:
        module.intern(Scalar(kind))
    _extend_types(module, rng, limits.max_types)

    stage = _weighted(rng, STAGE_WEIGHTS) if limits.max_statements > 0 else 'compute'
    _make_globals(module, rng, limits, allow_storage=stage != 'vertex')
    _prototypes(module, rng, limits, stage)
    for index in range(len(module.functions)):
        BodyBuilder(module, index, rng, limits).fill()

    problems = audit_module(module)
    if problems:
        log_warning(None, 'Generator', f"generated module rejected by audit ({problems[0]}); using fallback")
        return minimal_module()
    return module
