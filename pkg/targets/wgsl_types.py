"""
Type model of the reference validator.

Unlike the IR, source-level WGSL has abstract numeric kinds ('aint' and
'afloat') and reference types, so the validator keeps its own small,
self-contained representation. Struct types are nominal: members are
looked up in the checker's struct table by name.
"""

import math
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Tuple

from ir.builtins import Shape


SCALAR_KINDS = ('bool', 'i32', 'u32', 'f32')
ABSTRACT_KINDS = ('aint', 'afloat')
INT_KINDS = frozenset({'i32', 'u32', 'aint'})
FLOAT_KINDS = frozenset({'f32', 'afloat'})
NUMERIC_KINDS = INT_KINDS | FLOAT_KINDS
SIGNED_KINDS = frozenset({'i32', 'f32', 'aint', 'afloat'})

KIND_RANGES = {
    'i32': (-(1 << 31), (1 << 31) - 1),
    'u32': (0, (1 << 32) - 1),
    'aint': (-(1 << 63), (1 << 63) - 1),
}
F32_MAX = 3.4028234663852886e38

ADDRESS_SPACES = ('function', 'private', 'workgroup', 'uniform', 'storage')
DEFAULT_ACCESS = {'function': 'read_write', 'private': 'read_write', 'workgroup': 'read_write',
                  'uniform': 'read', 'storage': 'read'}


@dataclass(frozen=True)
class Ty:
    cat: str  # scalar | vector | matrix | array | struct | ptr | ref
    kind: str = ''  # element kind of scalars, vectors and matrices
    n: int = 0  # vector size, matrix columns, array length (0 = runtime-sized)
    m: int = 0  # matrix rows
    elem: Optional['Ty'] = None  # array element, pointer/reference store type
    name: str = ''  # struct name
    space: str = ''
    access: str = ''

    def __str__(self):
        if self.cat == 'scalar':
            return self.kind
        if self.cat == 'vector':
            return f"vec{self.n}<{self.kind}>"
        if self.cat == 'matrix':
            return f"mat{self.n}x{self.m}<{self.kind}>"
        if self.cat == 'array':
            return f"array<{self.elem}, {self.n}>" if self.n else f"array<{self.elem}>"
        if self.cat == 'struct':
            return self.name
        return f"{self.cat}<{self.space}, {self.elem}, {self.access}>"


def scalar(kind: str) -> Ty:
    return Ty('scalar', kind)


def vector(n: int, kind: str) -> Ty:
    return Ty('vector', kind, n)


def matrix(columns: int, rows: int, kind: str = 'f32') -> Ty:
    return Ty('matrix', kind, columns, rows)


def array(elem: Ty, n: int = 0) -> Ty:
    return Ty('array', n=n, elem=elem)


def struct(name: str) -> Ty:
    return Ty('struct', name=name)


def pointer(space: str, elem: Ty, access: str = '') -> Ty:
    return Ty('ptr', elem=elem, space=space, access=access or DEFAULT_ACCESS[space])


def reference(space: str, elem: Ty, access: str = '') -> Ty:
    return Ty('ref', elem=elem, space=space, access=access or DEFAULT_ACCESS[space])


BOOL, I32, U32, F32 = scalar('bool'), scalar('i32'), scalar('u32'), scalar('f32')
AINT, AFLOAT = scalar('aint'), scalar('afloat')


# ============================================================================
# Abstract numerics
# ============================================================================

def element_kind(ty: Ty) -> Optional[str]:
    if ty.cat in ('scalar', 'vector', 'matrix'):
        return ty.kind
    if ty.cat == 'array':
        return element_kind(ty.elem)
    return None


def is_abstract(ty: Ty) -> bool:
    return element_kind(ty) in ABSTRACT_KINDS


def with_kind(ty: Ty, kind: str) -> Ty:
    if ty.cat == 'array':
        return replace(ty, elem=with_kind(ty.elem, kind))
    return replace(ty, kind=kind)


def concretize(ty: Ty) -> Ty:
    """Default concrete type of an abstract one (aint -> i32, afloat -> f32)."""
    kind = element_kind(ty)
    if kind == 'aint':
        return with_kind(ty, 'i32')
    if kind == 'afloat':
        return with_kind(ty, 'f32')
    return ty


def kind_converts(src: str, dst: str) -> bool:
    if src == dst:
        return True
    if src == 'aint':
        return dst in ('i32', 'u32', 'f32', 'afloat')
    if src == 'afloat':
        return dst == 'f32'
    return False


def can_convert(src: Ty, dst: Ty) -> bool:
    """Automatic conversion of a value of type `src` to `dst`."""
    if src == dst:
        return True
    if src.cat != dst.cat:
        return False
    if src.cat in ('scalar', 'vector', 'matrix'):
        return src.n == dst.n and src.m == dst.m and kind_converts(src.kind, dst.kind)
    if src.cat == 'array':
        return src.n == dst.n and can_convert(src.elem, dst.elem)
    return False


def common_kind(kinds: List[str]) -> Optional[str]:
    """Kind every one of `kinds` converts to, preferring concrete kinds."""
    concrete = [k for k in kinds if k not in ABSTRACT_KINDS]
    if concrete:
        target = concrete[0]
        return target if all(kind_converts(k, target) for k in kinds) else None
    return 'afloat' if 'afloat' in kinds else 'aint'


def fits(value, kind: str) -> bool:
    """True if a constant value is representable in `kind`."""
    if kind in KIND_RANGES:
        low, high = KIND_RANGES[kind]
        return isinstance(value, int) and low <= value <= high
    if kind == 'f32':
        return math.isfinite(value) and abs(value) <= F32_MAX
    if kind == 'afloat':
        return math.isfinite(value)
    return True


# ============================================================================
# Type properties
# ============================================================================

StructTable = Dict[str, List[Tuple[str, Ty]]]


def is_constructible(ty: Ty, structs: StructTable) -> bool:
    if ty.cat in ('scalar', 'vector', 'matrix'):
        return ty.kind not in ABSTRACT_KINDS
    if ty.cat == 'array':
        return ty.n > 0 and is_constructible(ty.elem, structs)
    if ty.cat == 'struct':
        return all(is_constructible(t, structs) for _, t in structs.get(ty.name, ()))
    return False


def is_host_shareable(ty: Ty, structs: StructTable) -> bool:
    if ty.cat in ('scalar', 'vector', 'matrix'):
        return ty.kind in ('i32', 'u32', 'f32')
    if ty.cat == 'array':
        return is_host_shareable(ty.elem, structs)
    if ty.cat == 'struct':
        return all(is_host_shareable(t, structs) for _, t in structs.get(ty.name, ()))
    return False


def has_runtime_array(ty: Ty, structs: StructTable) -> bool:
    if ty.cat == 'array':
        return ty.n == 0 or has_runtime_array(ty.elem, structs)
    if ty.cat == 'struct':
        return any(has_runtime_array(t, structs) for _, t in structs.get(ty.name, ()))
    return False


def to_shape(ty: Ty) -> Optional[Shape]:
    if ty.cat == 'scalar':
        return Shape('scalar', kind=ty.kind)
    if ty.cat == 'vector':
        return Shape('vector', ty.n, 1, ty.kind)
    if ty.cat == 'matrix':
        return Shape('matrix', ty.n, ty.m, ty.kind)
    return None


def from_shape(shape: Shape) -> Ty:
    if shape.cat == 'scalar':
        return scalar(shape.kind)
    if shape.cat == 'vector':
        return vector(shape.n, shape.kind)
    return matrix(shape.n, shape.m, shape.kind)


def component_count(ty: Ty) -> int:
    if ty.cat == 'scalar':
        return 1
    if ty.cat == 'vector':
        return ty.n
    return 0
