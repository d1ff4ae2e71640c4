import random

import pytest

from ir.audit import audit_module, is_well_formed
from ir.generator import generate_module
from ir.lift import lift
from ir.module import Call, Compose, Store, iter_statements
from ir.mutations import (
    IR_OPERATOR_NAMES, InputReplace, Literals, Operators, Types, mutate_ir,
)
from ir.scope import scope_points
from ir.types import F32, I32, Array
from syntax.parser import parse
from targets.reference import validate_reference
from tests.ir_samples import arithmetic_module, array_module, call_module, vertex_module


def test_operator_names():
    assert IR_OPERATOR_NAMES == ('Operators', 'InputReplace', 'Literals', 'Built-ins', 'Types', 'CodeGen')


def test_operators_forced_choice():
    module, total = arithmetic_module()
    out = Operators().apply_at(module, (0, total), random.Random(0), choice='mul')
    assert out is not None
    expr = out.functions[0].expressions[total]
    assert expr.op == 'mul'
    assert out.types[expr.ty] == F32
    assert is_well_formed(out)
    # the input module is untouched
    assert module.functions[0].expressions[total].op == 'add'


def test_operators_rejects_ill_typed_choice():
    module, total = arithmetic_module()
    assert Operators().apply_at(module, (0, total), random.Random(0), choice='shl') is None
    assert 'logical_and' not in Operators.alternatives(module, module.functions[0], total)


def test_resize_array_pads_composes():
    module, arr = array_module(4)
    out = Types().resize_array(module, arr, random.Random(0), length=7)
    assert out is not None
    assert out.types[arr] == Array(out.types.index(F32), 7)
    composes = [e for e in out.functions[0].expressions if isinstance(e, Compose) and e.ty == arr]
    assert composes and all(len(c.components) == 7 for c in composes)
    assert audit_module(out) == []
    assert validate_reference(lift(out)).accepted


def test_input_replace_stores_call_result():
    module, h = vertex_module()
    vert = module.functions[1]
    n = next(i for i, p in enumerate(scope_points(vert)) if p.statement is h['store_pos'])
    out = InputReplace().apply_at(module, (1, n, 'value', 0), random.Random(0), replacement=h['result'])
    assert out is not None
    stores = [s for s in out.functions[1].body if isinstance(s, Store)]
    assert stores[0].pointer == h['pos']
    assert stores[0].value == h['result']
    assert is_well_formed(out)
    assert validate_reference(lift(out)).accepted


def test_add_parameter_updates_call_sites():
    module = call_module()
    out = Types().add_parameter(module, 0, random.Random(0), ty=module.types.index(I32))
    assert out is not None
    assert len(out.functions[0].params) == 1
    calls = [s for s in iter_statements(out.functions[1].body) if isinstance(s, Call)]
    assert calls and all(len(c.arguments) == 1 for c in calls)
    assert is_well_formed(out)
    assert validate_reference(lift(out)).accepted


def test_retype_parameter_converts_arguments():
    module, _ = arithmetic_module()
    out = Types().retype_parameter(module, 0, 0, random.Random(0), ty=I32)
    assert out is not None
    assert out.types[out.functions[0].params[0].ty] != F32
    assert is_well_formed(out)
    assert validate_reference(lift(out)).accepted


def test_literals_keep_kind():
    module, _ = array_module(3)
    rng = random.Random(4)
    sites = Literals().sites(module)
    out = Literals().apply_at(module, sites[0], rng)
    fi, h = sites[0]
    assert out.functions[fi].expressions[h].kind == 'f32'
    assert out.functions[fi].expressions[h].value != module.functions[fi].expressions[h].value


def test_strict_operator_without_sites_is_a_noop():
    module, _ = arithmetic_module()
    result = mutate_ir(module, random.Random(0), operator='Built-ins', strict=True)
    assert not result.applied
    assert result.tree is module


def test_unknown_operator():
    module, _ = arithmetic_module()
    with pytest.raises(ValueError):
        mutate_ir(module, random.Random(0), operator='Splice')


def test_random_mutations_stay_well_formed():
    rng = random.Random(2024)
    applied = set()
    for seed in range(40):
        module = generate_module(random.Random(seed))
        for _ in range(4):
            result = mutate_ir(module, rng)
            assert is_well_formed(result.tree)
            assert parse(lift(result.tree)).error_count() == 0
            if result.applied:
                applied.add(result.operator)
                module = result.tree
    assert applied <= set(IR_OPERATOR_NAMES)
    assert len(applied) >= 4


def test_weights_bias_the_first_operator():
    module = generate_module(random.Random(3))
    rng = random.Random(0)
    weights = {name: 0.0 for name in IR_OPERATOR_NAMES}
    weights['CodeGen'] = 1.0
    ops = [mutate_ir(module, rng, weights=weights).operator for _ in range(20)]
    assert ops.count('CodeGen') >= 15
