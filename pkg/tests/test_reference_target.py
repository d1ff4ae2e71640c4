import numpy as np

from engine.triage import crash_key
from targets.base import ACCEPTED, CRASHED, REJECTED
from targets.checker import Checker
from targets.instrumentation import Tracer, region_of, site_id, REGIONS
from targets.reference import ReferenceTarget, validate_reference, PARSE_ERROR, TYPE_ERROR, LIMIT_ERROR


def test_vertex_shader_is_accepted(vertex_source):
    outcome = validate_reference(vertex_source)
    assert outcome.accepted
    assert str(outcome) == ACCEPTED


def test_return_type_mismatch_is_a_type_error():
    outcome = validate_reference("fn f() { return 1; }")
    assert outcome.status == REJECTED
    assert outcome.reason == TYPE_ERROR


def test_syntax_error_is_a_parse_error():
    outcome = validate_reference("fn f( {")
    assert outcome.status == REJECTED
    assert outcome.reason == PARSE_ERROR


def test_overlong_identifier_is_a_limit_error():
    outcome = validate_reference(f"fn {'a' * 2000}() {{}}")
    assert outcome.reason == LIMIT_ERROR


def test_bytes_input_is_decoded(vertex_source):
    assert validate_reference(vertex_source.encode('utf-8')).accepted


def test_edges_are_deterministic(vertex_source):
    target = ReferenceTarget()
    target.run(vertex_source)
    first = target.trace_bits.copy()
    target.run("fn f() { return 1; }")
    target.run(vertex_source)
    assert np.array_equal(first, target.trace_bits)
    assert np.count_nonzero(first) > 0


def test_run_clears_previous_trace(vertex_source):
    target = ReferenceTarget()
    target.run(vertex_source)
    big = np.count_nonzero(target.trace_bits)
    result = target.run("x")
    assert result.status == REJECTED
    assert np.count_nonzero(target.trace_bits) < big


def test_accepted_and_rejected_runs_differ_in_coverage(vertex_source):
    target = ReferenceTarget()
    target.run(vertex_source)
    accepted = set(np.flatnonzero(target.trace_bits))
    target.run("fn f() { return 1; }")
    rejected = set(np.flatnonzero(target.trace_bits))
    assert accepted != rejected


def test_edges_are_attributed_to_regions(vertex_source):
    target = ReferenceTarget()
    target.run(vertex_source)
    regions = {target.region_of_edge(int(e)) for e in np.flatnonzero(target.trace_bits)}
    assert 'lexer' in regions
    assert 'checker' in regions
    assert regions <= set(REGIONS) | {'other'}


def test_region_prefixes():
    assert region_of('parser.recovery.skip') == 'parser.recovery'
    assert region_of('parser.fn_decl') == 'parser'
    assert region_of('lexer.ident') == 'lexer'
    assert region_of('somewhere') == 'other'


def test_site_ids_are_stable_and_in_range():
    assert site_id('checker.call') == site_id('checker.call')
    assert 0 <= site_id('checker.call') < 65536


def test_tracer_counters_saturate():
    tracer = Tracer()
    tracer.begin()
    for _ in range(600):
        tracer.hit('a')
        tracer.hit('a')
    assert tracer.trace_bits.max() == 255


def _lookup_failure(self):
    return {}['missing']


def _index_failure(self):
    return [][3]


def test_internal_failures_are_keyed_by_innermost_frame(monkeypatch, vertex_source):
    target = ReferenceTarget()
    keys = []
    for failure in (_lookup_failure, _index_failure):
        monkeypatch.setattr(Checker, 'check', failure)
        result = target.run(vertex_source)
        assert result.status == CRASHED
        assert result.top_frame.endswith(f"@{failure.__name__}:{failure.__code__.co_firstlineno + 1}")
        keys.append(crash_key(result))
    assert keys[0].startswith('internal-failure-')
    assert keys[0] != keys[1]
    assert validate_reference(vertex_source).frame.startswith('IndexError@')
