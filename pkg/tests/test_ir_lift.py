import pytest

from ir.audit import check_module, is_well_formed
from ir.lift import lift, literal_text
from ir.module import Binary, IrTypeError, IrValidationError, Literal, Return
from ir.types import F32, I32, Pointer, Vector
from ir.typing import add_typed, infer_type
from syntax.nodes import NodeKind
from syntax.parser import parse
from targets.reference import validate_reference
from tests.ir_samples import arithmetic_module, runtime_array_module, vertex_module


def test_infer_add_of_i32_literals():
    module, _ = arithmetic_module()
    function = module.functions[1]
    one = add_typed(module, function, Literal(1, 'i32'))
    two = add_typed(module, function, Literal(2, 'i32'))
    function.expressions.append(Binary('add', one, two))
    assert infer_type(module, function, len(function.expressions) - 1) == I32


def test_infer_mixed_kinds_is_a_type_error():
    module, _ = arithmetic_module()
    function = module.functions[1]
    one = add_typed(module, function, Literal(1, 'i32'))
    half = add_typed(module, function, Literal(1.0, 'f32'))
    function.expressions.append(Binary('add', one, half))
    with pytest.raises(IrTypeError):
        infer_type(module, function, len(function.expressions) - 1)
    with pytest.raises(IrTypeError):
        add_typed(module, function, Binary('add', one, half))


def test_member_access_on_local_struct():
    module, handles = vertex_module()
    vert = module.functions[1]
    ty = infer_type(module, vert, handles['pos'])
    assert isinstance(ty, Pointer)
    assert module.types[ty.pointee] == Vector(4, F32)


def test_vertex_module_lifts_to_equivalent_shader():
    module, _ = vertex_module()
    check_module(module)
    text = lift(module)
    tree = parse(text)
    assert tree.error_count() == 0
    kinds = [c.kind for c in tree.root.children]
    assert kinds == [NodeKind.STRUCT_DECL, NodeKind.FUNCTION_DECL, NodeKind.FUNCTION_DECL]
    assert 'struct VertexOut' in text
    assert 'fn color' in text and 'fn vert_main' in text
    assert '@vertex' in text
    assert validate_reference(text).accepted


def test_lift_is_deterministic():
    module, _ = vertex_module()
    assert lift(module) == lift(module.clone())


def test_check_module_raises_on_broken_return():
    module, total = arithmetic_module()
    module.functions[0].body = [Return(total)]
    with pytest.raises(IrValidationError):
        check_module(module)
    assert not is_well_formed(module)


def test_literal_spelling():
    assert literal_text(True, 'bool') == 'true'
    assert literal_text(3, 'u32') == '3u'
    assert literal_text(-2, 'i32') == '(-2i)'
    assert literal_text(-(1 << 31), 'i32') == '(-2147483647i - 1i)'
    assert literal_text(-0.0, 'f32') == '(-0.0f)'
    assert literal_text(0.5, 'f32') == '0.5f'


def test_constant_index_into_runtime_array():
    module, element = runtime_array_module()
    check_module(module)
    assert validate_reference(lift(module)).accepted

    main = module.functions[0]
    main.expressions[main.expressions[element].index].value = -1
    assert not is_well_formed(module)
    assert validate_reference(lift(module)).status == 'rejected'
    with pytest.raises(IrTypeError):
        infer_type(module, main, element)
