import os

from engine.coverage import CoverageMap
from engine.executor import Executor, CRASH, NOVEL, BORING
from engine.minimize import minimize
from engine.sample import AST, Sample
from engine.triage import CrashStore, crash_key, triage_and_admit, CRASH_INPUT_NAME, CRASH_META_NAME
from syntax.parser import parse
from syntax.unparse import unparse
from targets.base import ACCEPTED, CRASHED, REJECTED, RunResult
from targets.external import ExternalTarget, run_external
from targets.reference import ReferenceTarget


def _executor():
    return Executor(ReferenceTarget(), CoverageMap())


def test_first_run_is_novel_then_boring(vertex_source):
    executor = _executor()
    verdict = executor.run_one(vertex_source)
    assert verdict.kind == NOVEL
    assert verdict.status == ACCEPTED
    assert verdict.novel
    executor.coverage.merge(verdict.trace)
    again = executor.run_one(vertex_source)
    assert again.kind == BORING
    assert again.new_edges == frozenset()
    assert executor.runs == 2


def test_rejected_input_can_be_novel():
    verdict = _executor().run_one("fn f() { return 1; }")
    assert verdict.status == REJECTED
    assert verdict.kind == NOVEL


def test_oversized_text_is_skipped_without_running():
    executor = Executor(ReferenceTarget(), CoverageMap(), max_output_bytes=16)
    verdict = executor.run_one("fn f() {}" * 10)
    assert verdict.skipped
    assert verdict.kind == BORING
    assert executor.runs == 0


def test_stable_edges_of_a_deterministic_target(vertex_source):
    executor = _executor()
    verdict = executor.run_one(vertex_source)
    stable = executor.stable_novel_edges(vertex_source, initial=verdict.new_edges)
    assert stable == verdict.new_edges
    assert executor.runs == 5


def test_reaches(vertex_source):
    executor = _executor()
    edges = executor.edge_set(vertex_source)
    assert executor.reaches(vertex_source, edges)
    assert not executor.reaches("x", edges)


def test_crash_is_saved_once_per_key(stub_target, tmp_path):
    argv = stub_target("""
        touch([9])
        sys.stderr.write('    #0 0x1234 in Lower::Expr x.cc:1\\n')
        sys.exit(134)
    """)
    store = CrashStore(str(tmp_path / 'out'))
    with ExternalTarget(argv) as target:
        executor = Executor(target, CoverageMap())
        pending = []
        for i in range(2):
            sample = Sample(AST, parse("fn f() {}"))
            verdict = executor.run_one(sample.source)
            assert verdict.kind == CRASH
            assert verdict.status == CRASHED
            admitted = triage_and_admit(sample, verdict, pending, store, exec_index=i)
            assert admitted
    assert len(store) == 1
    key = store.keys()[0]
    assert key.startswith('exit134-')
    assert store.hits[key] == 2
    crash_dir = os.path.join(str(tmp_path / 'out'), 'crashes', key)
    with open(os.path.join(crash_dir, CRASH_INPUT_NAME)) as f:
        assert f.read() == unparse(parse("fn f() {}"))
    with open(os.path.join(crash_dir, CRASH_META_NAME)) as f:
        meta = f.read()
    assert 'hits=2' in meta
    assert 'top_frame=Lower::Expr' in meta


def test_crash_key_falls_back_to_edges():
    result = RunResult(CRASHED, 'exit', exit_code=2)
    assert crash_key(result, [1, 2]) == crash_key(result, [2, 1])
    assert crash_key(result, [1, 2]) != crash_key(result, [1, 3])
    assert crash_key(RunResult(CRASHED, 'signal', signal=11)).startswith('SIGSEGV-')
    assert crash_key(RunResult(CRASHED, 'internal-failure')).startswith('internal-failure-')


def test_boring_sample_is_not_admitted(vertex_source):
    executor = _executor()
    executor.coverage.merge(executor.run_one(vertex_source).trace)
    pending = []
    sample = Sample(AST, parse(vertex_source))
    assert not triage_and_admit(sample, executor.run_one(vertex_source), pending)
    assert pending == []


def test_minimize_keeps_stable_edges(vertex_source):
    executor = _executor()
    sample = Sample(AST, parse(vertex_source))
    verdict = executor.run_one(sample.source)
    stable = executor.stable_novel_edges(sample.source, initial=verdict.new_edges)
    out = minimize(sample, executor, stable, max_checks=60)
    assert out.novel_edges == stable
    assert not out.flagged
    assert out.size() <= sample.size()
    assert executor.reaches(out.source, stable)
    assert sample.source == unparse(parse(vertex_source))


def test_minimize_drops_what_the_edges_do_not_need():
    executor = _executor()
    source = "fn f() {}\nfn g() { let a = 1; let b = a + 2; }"
    needed = executor.edge_set("fn f() {}") & executor.edge_set(source)
    sample = Sample(AST, parse(source))
    out = minimize(sample, executor, needed)
    assert out.size() < sample.size()


def test_minimize_without_stable_edges_flags_the_sample(vertex_source):
    sample = Sample(AST, parse(vertex_source))
    out = minimize(sample, _executor(), frozenset())
    assert out.flagged
    assert out.source == sample.source


def test_stable_edges_drop_a_flaky_branch(stub_target):
    # edge 200 fires on every other run of the stub
    argv = stub_target("""
        counter = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'runs.txt')
        n = int(open(counter).read()) if os.path.exists(counter) else 0
        with open(counter, 'w') as f:
            f.write(str(n + 1))
        touch([100, 200] if n % 2 else [100])
        sys.exit(0)
    """)
    with ExternalTarget(argv) as target:
        executor = Executor(target, CoverageMap())
        for _ in range(20):
            verdict = executor.run_one("fn f() {}")
            stable = executor.stable_novel_edges("fn f() {}", repeats=5, initial=verdict.new_edges)
            assert stable == frozenset({100})


def test_saved_crash_replays_through_the_target(stub_target, tmp_path):
    argv = stub_target("""
        touch([3])
        if 'trigger' in source:
            sys.stderr.write('    #0 0x77 in Emit::Trigger e.cc:9\\n')
            sys.exit(134)
        sys.exit(0)
    """)
    store = CrashStore(str(tmp_path / 'out'))
    with ExternalTarget(argv) as target:
        executor = Executor(target, CoverageMap())
        pending = []
        for i, text in enumerate(("fn trigger() {}", "fn f() {}", "fn trigger() { let a = 1; }")):
            sample = Sample(AST, parse(text))
            triage_and_admit(sample, executor.run_one(sample.source), pending, store, exec_index=i)
        assert len(store) == 1
        crash_dir = os.path.join(str(tmp_path / 'out'), 'crashes', store.keys()[0])
        with open(os.path.join(crash_dir, CRASH_INPUT_NAME)) as f:
            replayed, _ = run_external(target, f.read())
    assert replayed.status == CRASHED
    assert replayed.top_frame == 'Emit::Trigger'
