import random

from ir.audit import is_well_formed
from ir.generator import generate_module
from ir.minimize import minimize_ir
from ir.module import If, Loop, Return, Store, Switch, minimal_module
from tests.ir_samples import returning_module, two_globals_module


def test_always_true_gives_fallback():
    module = generate_module(random.Random(8))
    out = minimize_ir(module, lambda m: True)
    assert out.size() == minimal_module().size()
    assert len(out.functions) == 1
    assert is_well_formed(out)


def test_unneeded_global_removed():
    module = two_globals_module()
    out = minimize_ir(module, lambda m: any(g.name == 'g0' for g in m.globals))
    assert [g.name for g in out.globals] == ['g0']
    assert is_well_formed(out)


def test_only_final_return_survives():
    module = returning_module()

    def keep(m):
        return any(f.name == 'h' and f.body and isinstance(f.body[-1], Return) for f in m.functions)

    out = minimize_ir(module, keep)
    helper = next(f for f in out.functions if f.name == 'h')
    assert isinstance(helper.body[-1], Return)
    assert not any(isinstance(s, (Store, If, Loop, Switch)) for s in helper.body)
    assert is_well_formed(out)
    assert out.size() < module.size()


def test_never_grows_and_keeps_predicate():
    for seed in range(10):
        module = generate_module(random.Random(seed))
        entry = module.entry_points()[0].name
        out = minimize_ir(module, lambda m: any(f.name == entry for f in m.functions))
        assert out.size() <= module.size()
        assert any(f.name == entry for f in out.functions)
        assert is_well_formed(out)


def test_input_not_modified():
    module = two_globals_module()
    before = module.clone()
    minimize_ir(module, lambda m: True)
    assert module == before
