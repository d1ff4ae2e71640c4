import random

from ir.audit import audit_module, is_well_formed
from ir.generator import GenerationLimits, generate_module
from ir.lift import lift
from ir.module import Function, minimal_module
from ir.typing import infer_type
from ir.types import Scalar
from syntax.parser import parse
from targets.reference import PARSE_ERROR, validate_reference

SAMPLES = 150


def test_degenerate_limits():
    limits = GenerationLimits(max_types=0, max_functions=1, max_statements=0, max_globals=0)
    module = generate_module(random.Random(0), limits)
    assert all(isinstance(t, Scalar) for t in module.types)
    assert len(module.functions) == 1
    entry = module.functions[0]
    assert entry.stage == 'compute'
    assert entry.statement_count() == 0
    assert validate_reference(lift(module)).accepted


def test_same_seed_same_module():
    a = generate_module(random.Random(42))
    b = generate_module(random.Random(42))
    assert a == b
    assert lift(a) == lift(b)


def test_different_seeds_differ():
    texts = {lift(generate_module(random.Random(seed))) for seed in range(10)}
    assert len(texts) > 1


def test_generated_modules_are_well_formed():
    for seed in range(SAMPLES):
        module = generate_module(random.Random(seed))
        assert audit_module(module) == [], seed
        for function in module.functions:
            for handle, expr in enumerate(function.expressions):
                assert module.types[expr.ty] == infer_type(module, function, handle)


def test_lifted_text_parses_cleanly():
    for seed in range(SAMPLES):
        tree = parse(lift(generate_module(random.Random(seed))))
        assert tree.error_count() == 0, seed


def test_reference_acceptance_rate():
    accepted = 0
    for seed in range(SAMPLES):
        outcome = validate_reference(lift(generate_module(random.Random(seed))))
        assert outcome.reason != PARSE_ERROR, outcome
        accepted += outcome.accepted
    assert accepted >= 0.9 * SAMPLES


def test_generator_covers_all_stages():
    stages = set()
    for seed in range(SAMPLES):
        stages.update(f.stage for f in generate_module(random.Random(seed)).entry_points())
    assert stages == {'compute', 'vertex', 'fragment'}


def test_minimal_module_lifts_to_valid_shader():
    module = minimal_module()
    assert is_well_formed(module)
    text = lift(module)
    assert '@compute' in text
    assert validate_reference(text).accepted


def test_module_without_entry_point_is_rejected_by_audit():
    module = minimal_module()
    module.functions = [Function('helper')]
    assert any('entry point' in p for p in audit_module(module))
