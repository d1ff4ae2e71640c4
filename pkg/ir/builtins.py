"""
Built-in function catalog.

Signatures are expressed over shapes (scalar / vector / matrix plus an
element kind) so the same table serves the IR type rules and the reference
validator. Kinds may be the abstract numeric kinds 'aint' / 'afloat' on the
validator side; IR code only ever passes concrete kinds.
"""

from typing import Callable, Dict, List, NamedTuple, Optional, Sequence


class Shape(NamedTuple):
    cat: str  # scalar | vector | matrix
    n: int = 1  # vector size / matrix columns
    m: int = 1  # matrix rows
    kind: str = 'f32'


FLOAT_KINDS = frozenset({'f32', 'afloat'})
SINT_KINDS = frozenset({'i32', 'aint'})
INT_KINDS = frozenset({'i32', 'u32', 'aint'})
NUMERIC_KINDS = FLOAT_KINDS | INT_KINDS
SIGNED_NUMERIC_KINDS = FLOAT_KINDS | SINT_KINDS


def _sv(shape: Shape) -> bool:
    return shape.cat in ('scalar', 'vector')


def _same(args: Sequence[Shape]) -> bool:
    return all(a == args[0] for a in args)


def _componentwise(kinds, arity: int) -> Callable:
    def rule(args):
        if len(args) != arity or not _sv(args[0]) or args[0].kind not in kinds or not _same(args):
            return None
        return args[0]
    return rule


def _float_reduce(arity: int, vectors_only: bool = False) -> Callable:
    def rule(args):
        if len(args) != arity or not _sv(args[0]) or args[0].kind not in FLOAT_KINDS or not _same(args):
            return None
        if vectors_only and args[0].cat != 'vector':
            return None
        return Shape('scalar', kind=args[0].kind)
    return rule


def _float_vector_map(arity: int) -> Callable:
    def rule(args):
        if len(args) != arity or args[0].cat != 'vector' or args[0].kind not in FLOAT_KINDS or not _same(args):
            return None
        return args[0]
    return rule


def _dot(args):
    if len(args) != 2 or args[0].cat != 'vector' or args[0].kind not in NUMERIC_KINDS or not _same(args):
        return None
    return Shape('scalar', kind=args[0].kind)


def _cross(args):
    if len(args) != 2 or not _same(args) or args[0].cat != 'vector' or args[0].n != 3 \
            or args[0].kind not in FLOAT_KINDS:
        return None
    return args[0]


def _select(args):
    if len(args) != 3 or not _sv(args[0]) or args[0] != args[1]:
        return None
    cond = args[2]
    if cond.kind != 'bool':
        return None
    if cond.cat == 'scalar' or (cond.cat == 'vector' and args[0].cat == 'vector' and cond.n == args[0].n):
        return args[0]
    return None


def _all_any(args):
    if len(args) != 1 or not _sv(args[0]) or args[0].kind != 'bool':
        return None
    return Shape('scalar', kind='bool')


def _transpose(args):
    if len(args) != 1 or args[0].cat != 'matrix':
        return None
    a = args[0]
    return Shape('matrix', a.m, a.n, a.kind)


def _determinant(args):
    if len(args) != 1 or args[0].cat != 'matrix' or args[0].n != args[0].m:
        return None
    return Shape('scalar', kind=args[0].kind)


def _float_or_sint(arity: int) -> Callable:
    return _componentwise(SIGNED_NUMERIC_KINDS, arity)


BUILTINS: Dict[str, Callable[[Sequence[Shape]], Optional[Shape]]] = {}

for _name in ('acos', 'asin', 'atan', 'ceil', 'cos', 'cosh', 'degrees', 'exp', 'exp2',
              'floor', 'fract', 'inverseSqrt', 'log', 'log2', 'radians', 'round', 'saturate',
              'sin', 'sinh', 'sqrt', 'tan', 'tanh', 'trunc'):
    BUILTINS[_name] = _componentwise(FLOAT_KINDS, 1)
for _name in ('atan2', 'pow', 'step'):
    BUILTINS[_name] = _componentwise(FLOAT_KINDS, 2)
for _name in ('mix', 'smoothstep', 'fma'):
    BUILTINS[_name] = _componentwise(FLOAT_KINDS, 3)
for _name in ('min', 'max'):
    BUILTINS[_name] = _componentwise(NUMERIC_KINDS, 2)
BUILTINS['clamp'] = _componentwise(NUMERIC_KINDS, 3)
BUILTINS['abs'] = _componentwise(NUMERIC_KINDS, 1)
BUILTINS['sign'] = _float_or_sint(1)
for _name in ('countOneBits', 'reverseBits', 'firstLeadingBit', 'firstTrailingBit',
              'countLeadingZeros', 'countTrailingZeros'):
    BUILTINS[_name] = _componentwise(INT_KINDS, 1)
BUILTINS['length'] = _float_reduce(1)
BUILTINS['distance'] = _float_reduce(2)
BUILTINS['normalize'] = _float_vector_map(1)
BUILTINS['reflect'] = _float_vector_map(2)
BUILTINS['faceForward'] = _float_vector_map(3)
BUILTINS['dot'] = _dot
BUILTINS['cross'] = _cross
BUILTINS['select'] = _select
BUILTINS['all'] = _all_any
BUILTINS['any'] = _all_any
BUILTINS['transpose'] = _transpose
BUILTINS['determinant'] = _determinant

# takes a pointer to a runtime-sized array; checked by the callers
POINTER_BUILTINS = frozenset({'arrayLength'})

BUILTIN_NAMES = tuple(sorted(BUILTINS)) + tuple(sorted(POINTER_BUILTINS))

ARITY = {}
for _name in BUILTINS:
    for _n in (1, 2, 3):
        probe = [Shape('vector', 3, 1, 'f32')] * _n
        if BUILTINS[_name](probe) is not None:
            ARITY[_name] = _n
ARITY.update({'select': 3, 'all': 1, 'any': 1, 'transpose': 1, 'determinant': 1, 'arrayLength': 1,
              'countOneBits': 1, 'reverseBits': 1, 'firstLeadingBit': 1, 'firstTrailingBit': 1,
              'countLeadingZeros': 1, 'countTrailingZeros': 1})


def builtin_result(name: str, args: Sequence[Shape]) -> Optional[Shape]:
    """Result shape of calling `name` with `args`, or None if the call is invalid."""
    rule = BUILTINS.get(name)
    if rule is None:
        return None
    return rule(list(args))


def compatible_builtins(name: str, args: Sequence[Shape]) -> List[str]:
    """Other builtins accepting the same arguments with the same result shape."""
    want = builtin_result(name, args)
    if want is None:
        return []
    return [other for other in sorted(BUILTINS)
            if other != name and builtin_result(other, args) == want]
