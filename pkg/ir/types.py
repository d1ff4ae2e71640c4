"""
IR type model.

Types are frozen value objects interned in a per-module arena
(``IrModule.types``); expressions refer to them by handle.
"""

from dataclasses import dataclass
from typing import Optional, Tuple, Union


SCALAR_KINDS = ('bool', 'i32', 'u32', 'f32')
NUMERIC_KINDS = ('i32', 'u32', 'f32')
INTEGER_KINDS = ('i32', 'u32')
ADDRESS_SPACES = ('function', 'private', 'storage')


@dataclass(frozen=True)
class Scalar:
    kind: str  # bool | i32 | u32 | f32

    def __post_init__(self):
        if self.kind not in SCALAR_KINDS:
            raise ValueError(f"unknown scalar kind {self.kind}")


@dataclass(frozen=True)
class Vector:
    size: int  # 2..4
    element: Scalar


@dataclass(frozen=True)
class Matrix:
    columns: int  # 2..4
    rows: int  # 2..4
    element: Scalar = Scalar('f32')


@dataclass(frozen=True)
class Array:
    element: int  # type handle
    length: Optional[int]  # None = runtime-sized


@dataclass(frozen=True)
class Binding:
    """IO binding of an entry-point parameter, result or struct member."""
    builtin: Optional[str] = None
    location: Optional[int] = None

    def __str__(self):
        if self.builtin is not None:
            return f"@builtin({self.builtin})"
        return f"@location({self.location})"


@dataclass(frozen=True)
class StructMember:
    name: str
    ty: int  # type handle
    binding: Optional[Binding] = None


@dataclass(frozen=True)
class Struct:
    name: str
    members: Tuple[StructMember, ...]


@dataclass(frozen=True)
class Pointer:
    space: str  # function | private | storage
    pointee: int  # type handle


IrType = Union[Scalar, Vector, Matrix, Array, Struct, Pointer]

BOOL = Scalar('bool')
I32 = Scalar('i32')
U32 = Scalar('u32')
F32 = Scalar('f32')


def scalar_of(ty) -> Optional[Scalar]:
    """Element scalar of a scalar or vector type (None otherwise)."""
    if isinstance(ty, Scalar):
        return ty
    if isinstance(ty, Vector):
        return ty.element
    return None


def with_scalar(ty, scalar: Scalar):
    """Same shape as `ty` (scalar or vector) with a different element kind."""
    if isinstance(ty, Vector):
        return Vector(ty.size, scalar)
    return scalar
