import random

import pytest

from ir.audit import is_well_formed
from ir.generator import generate_module
from ir.lift import lift
from ir.module import Loop, iter_statements, minimal_module
from ir.raising import RaiseError, raise_module
from ir.types import Struct
from syntax.parser import parse
from targets.reference import validate_reference

FOR_LOOP = """
@compute @workgroup_size(1)
fn main() {
  var s: i32 = 0;
  for (var i: i32 = 0; i < 4; i++) {
    s += i;
  }
}
"""

WHILE_LOOP = """
@compute @workgroup_size(1)
fn main() {
  var n: u32 = 10u;
  while (n > 0u) {
    n = n - 1u;
  }
}
"""


def test_raise_vertex_shader(vertex_source):
    module = raise_module(parse(vertex_source))
    assert is_well_formed(module)
    assert [f.name for f in module.functions] == ['color', 'vert_main']
    assert module.functions[1].stage == 'vertex'
    structs = [t for t in module.types if isinstance(t, Struct)]
    assert [s.name for s in structs] == ['VertexOut']
    assert validate_reference(lift(module)).accepted


def test_syntax_errors_are_not_raised():
    with pytest.raises(RaiseError):
        raise_module(parse('fn f( { }'))


def test_uniform_variables_stay_ast_only():
    source = '@group(0) @binding(0) var<uniform> u: f32;\n@compute @workgroup_size(1) fn main() {}'
    with pytest.raises(RaiseError):
        raise_module(parse(source))


@pytest.mark.parametrize('source', [FOR_LOOP, WHILE_LOOP])
def test_loops_are_lowered(source):
    module = raise_module(parse(source))
    assert any(isinstance(s, Loop) for s in iter_statements(module.functions[0].body))
    assert is_well_formed(module)
    assert validate_reference(lift(module)).accepted


def test_minimal_module_raises_again():
    again = raise_module(parse(lift(minimal_module())))
    assert [f.name for f in again.functions] == ['f0']
    assert again.functions[0].stage == 'compute'


def test_lifted_modules_raise_again():
    for seed in range(30):
        module = generate_module(random.Random(seed))
        try:
            again = raise_module(parse(lift(module)))
        except RaiseError:
            continue
        assert is_well_formed(again)
        assert len(again.functions) == len(module.functions)
