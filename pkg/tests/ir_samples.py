"""Hand-built IR modules shared by the IR tests."""

from ir.module import (
    IrModule, Function, FunctionParam, FunctionResult, LocalVar, GlobalVar,
    FunctionArgument, LocalVariable, GlobalVariable, Literal, Compose, AccessIndex,
    Access, Binary, CallResult, Load, Emit, Store, Call, If, Return,
)
from ir.types import Array, Binding, F32, I32, Scalar, Struct, StructMember, Vector
from ir.typing import add_typed


def scalar_pool(module: IrModule):
    for kind in ('bool', 'i32', 'u32', 'f32'):
        module.intern(Scalar(kind))


def vertex_module():
    """The vertex shader of seeds/vertex_color.wgsl, written out as IR.

    Returns the module and the handles the tests poke at.
    """
    m = IrModule()
    scalar_pool(m)
    vec4 = m.intern(Vector(4, F32))
    out_ty = m.intern(Struct('VertexOut', (
        StructMember('pos', vec4, Binding(builtin='position')),
        StructMember('col', vec4, Binding(location=0)),
    )))
    color = Function('color', result=FunctionResult(vec4))
    vert = Function('vert_main', params=[FunctionParam('pos', vec4, Binding(location=0))],
                    result=FunctionResult(out_ty), locals=[LocalVar('out', out_ty)], stage='vertex')
    m.functions = [color, vert]

    zero = add_typed(m, color, Literal(0.0, 'f32'))
    value = add_typed(m, color, Compose([zero, zero, zero, zero], ty=vec4))
    color.body = [Emit(value), Return(value)]

    arg = add_typed(m, vert, FunctionArgument(0))
    local = add_typed(m, vert, LocalVariable(0))
    pos = add_typed(m, vert, AccessIndex(local, 0))
    col = add_typed(m, vert, AccessIndex(local, 1))
    result = add_typed(m, vert, CallResult(0))
    loaded = add_typed(m, vert, Load(local))
    store_pos = Store(pos, arg)
    vert.body = [
        Emit(pos), Emit(col), Call(0, [], result),
        store_pos, Store(col, result),
        Emit(loaded), Return(loaded),
    ]
    handles = {'arg': arg, 'local': local, 'pos': pos, 'col': col, 'result': result,
               'store_pos': store_pos}
    return m, handles


def arithmetic_module():
    """Helper `f(a: f32, b: f32) -> f32 { return a + b; }` plus an empty compute entry."""
    m = IrModule()
    scalar_pool(m)
    f32 = m.intern(F32)
    helper = Function('f', params=[FunctionParam('a', f32), FunctionParam('b', f32)],
                      result=FunctionResult(f32))
    main = Function('main', stage='compute')
    m.functions = [helper, main]
    a = add_typed(m, helper, FunctionArgument(0))
    b = add_typed(m, helper, FunctionArgument(1))
    total = add_typed(m, helper, Binary('add', a, b))
    helper.body = [Emit(total), Return(total)]
    return m, total


def array_module(length: int = 4):
    """Compute entry storing a composed array<f32, length> into a local."""
    m = IrModule()
    scalar_pool(m)
    f32 = m.intern(F32)
    arr = m.intern(Array(f32, length))
    main = Function('main', locals=[LocalVar('v', arr)], stage='compute')
    m.functions = [main]
    items = [add_typed(m, main, Literal(float(i + 1), 'f32')) for i in range(length)]
    local = add_typed(m, main, LocalVariable(0))
    value = add_typed(m, main, Compose(items, ty=arr))
    main.body = [Emit(value), Store(local, value)]
    return m, arr


def call_module():
    """Void helper `g()` called once from a compute entry."""
    m = IrModule()
    scalar_pool(m)
    helper = Function('g')
    main = Function('main', stage='compute')
    m.functions = [helper, main]
    main.body = [Call(0, [])]
    return m


def two_globals_module():
    m = IrModule()
    scalar_pool(m)
    i32 = m.intern(I32)
    m.globals = [GlobalVar('g0', i32, 'private'), GlobalVar('g1', i32, 'private')]
    main = Function('main', stage='compute')
    m.functions = [main]
    g0 = add_typed(m, main, GlobalVariable(0))
    g1 = add_typed(m, main, GlobalVariable(1))
    one = add_typed(m, main, Literal(1, 'i32'))
    main.body = [Store(g0, one), Store(g1, one)]
    return m


def returning_module():
    """Helper `h() -> i32` with a few statements before its return."""
    m = IrModule()
    scalar_pool(m)
    i32 = m.intern(I32)
    helper = Function('h', result=FunctionResult(i32), locals=[LocalVar('v', i32)])
    main = Function('main', stage='compute')
    m.functions = [helper, main]
    one = add_typed(m, helper, Literal(1, 'i32'))
    two = add_typed(m, helper, Literal(2, 'i32'))
    flag = add_typed(m, helper, Literal(True, 'bool'))
    local = add_typed(m, helper, LocalVariable(0))
    total = add_typed(m, helper, Binary('add', one, two))
    loaded = add_typed(m, helper, Load(local))
    helper.body = [
        Emit(total), Store(local, total),
        If(flag, [Store(local, two)], []),
        Emit(loaded), Return(loaded),
    ]
    return m


def runtime_array_module(index: int = 2):
    """Compute entry storing 1.0 into `g0.m1[index]`, `m1` a runtime-sized array in storage."""
    m = IrModule()
    scalar_pool(m)
    f32 = m.intern(F32)
    runtime = m.intern(Array(f32, None))
    buffer = m.intern(Struct('Buffer', (StructMember('m0', f32), StructMember('m1', runtime))))
    m.globals = [GlobalVar('g0', buffer, 'storage', 0, 0)]
    main = Function('main', stage='compute')
    m.functions = [main]
    g0 = add_typed(m, main, GlobalVariable(0))
    items = add_typed(m, main, AccessIndex(g0, 1))
    at = add_typed(m, main, Literal(index, 'i32'))
    element = add_typed(m, main, Access(items, at))
    one = add_typed(m, main, Literal(1.0, 'f32'))
    main.body = [Emit(items), Emit(element), Store(element, one)]
    return m, element
