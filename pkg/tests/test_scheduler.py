import random
from collections import Counter

import pytest

from config.config import EXPLORATION_FLOOR, STACK_MAX, STACK_MIN
from engine.sample import AST, IR, Sample
from engine.scheduler import (
    SchedulerState, schedule_next, stack_depth, log_scale, compute_energy, OPERATORS_BY_LAYER,
)
from ir.module import minimal_module
from syntax.mutations import AST_OPERATOR_NAMES
from syntax.parser import parse


def _ast_sample(source="fn f() {}", sample_id=0, novel=()):
    sample = Sample(AST, parse(source), novel_edges=frozenset(novel))
    sample.id = sample_id
    return sample


def _ir_sample(sample_id=0):
    sample = Sample(IR, minimal_module())
    sample.id = sample_id
    return sample


def test_log_scale():
    assert log_scale(0) == 1
    assert log_scale(2) == 1
    assert log_scale(1024) == 10
    assert log_scale(8, scale=5) == 11


def test_unseen_operators_are_uniform():
    probs = SchedulerState().probabilities(AST_OPERATOR_NAMES)
    assert set(probs) == set(AST_OPERATOR_NAMES)
    assert all(p == pytest.approx(1 / len(AST_OPERATOR_NAMES)) for p in probs.values())


def test_probabilities_follow_success_rates():
    state = SchedulerState(chosen={'a': 9, 'b': 9}, successes={'a': 9, 'b': 1})
    probs = state.probabilities(['a', 'b'])
    assert probs['a'] == pytest.approx(5 / 6)
    assert probs['b'] == pytest.approx(1 / 6)

    rng = random.Random(7)
    picks = Counter(state.choose_operator(['a', 'b'], rng) for _ in range(6000))
    assert 4.0 < picks['a'] / picks['b'] < 6.5


def test_exploration_floor():
    ops = ['a', 'b', 'c', 'd', 'e', 'f']
    state = SchedulerState(chosen={'a': 1000})
    probs = state.probabilities(ops)
    assert probs['a'] == pytest.approx(EXPLORATION_FLOOR)
    assert sum(probs.values()) == pytest.approx(1.0)
    assert all(probs[op] == pytest.approx((1 - EXPLORATION_FLOOR) / 5) for op in ops[1:])


def test_record_counts():
    state = SchedulerState()
    state.record('Swap', True)
    state.record('Swap', False)
    assert state.chosen['Swap'] == 2
    assert state.successes['Swap'] == 1
    assert state.weight('Swap') == pytest.approx(2 / 3)


def test_stack_depth_bounds():
    rng = random.Random(3)
    depths = [stack_depth(rng) for _ in range(2000)]
    assert min(depths) == STACK_MIN
    assert max(depths) <= STACK_MAX
    assert Counter(depths)[1] > 800


def test_energy_prefers_productive_and_recent_samples():
    rich = _ast_sample(sample_id=1, novel=range(50))
    poor = _ast_sample(sample_id=1)
    old = _ast_sample(sample_id=0, novel=range(50))
    assert compute_energy(rich, 1, deterministic=True) > compute_energy(poor, 1, deterministic=True)
    assert compute_energy(rich, 1, deterministic=True) > compute_energy(old, 1, deterministic=True)
    assert compute_energy(poor, 1, deterministic=True) > 0


def test_single_sample_is_always_scheduled(rng):
    sample = _ast_sample()
    for _ in range(20):
        chosen, operator = schedule_next([sample], SchedulerState(), rng)
        assert chosen is sample
        assert operator in AST_OPERATOR_NAMES


def test_operator_comes_from_the_sample_layer(rng):
    corpus = [_ast_sample(sample_id=0), _ir_sample(sample_id=1)]
    for _ in range(50):
        sample, operator = schedule_next(corpus, SchedulerState(), rng)
        assert operator in OPERATORS_BY_LAYER[sample.layer]


def test_disabled_layer_is_never_scheduled(rng):
    corpus = [_ast_sample(sample_id=0), _ir_sample(sample_id=1)]
    for _ in range(30):
        sample, _ = schedule_next(corpus, SchedulerState(), rng, layers=frozenset({IR}))
        assert sample.layer == IR
    assert schedule_next([_ast_sample()], SchedulerState(), rng, layers=frozenset({IR})) is None
    assert schedule_next([], SchedulerState(), rng) is None
