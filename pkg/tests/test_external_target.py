import logging
import os
import signal

import numpy as np
import pytest

from targets.base import ACCEPTED, REJECTED, CRASHED, TIMED_OUT, TargetError
from targets.external import ExternalTarget, run_external, signal_name, top_frame


def test_accepted_run_reports_touched_edges(stub_target):
    argv = stub_target("""
        touch([11, 222, 3333])
        sys.exit(0)
    """)
    with ExternalTarget(argv) as target:
        result, trace = run_external(target, "fn f() {}")
    assert result.status == ACCEPTED
    assert list(np.flatnonzero(trace)) == [11, 222, 3333]


def test_map_is_cleared_between_runs(stub_target):
    argv = stub_target("""
        touch([5] if 'first' in source else [6])
        sys.exit(0)
    """)
    with ExternalTarget(argv) as target:
        run_external(target, "// first")
        _, trace = run_external(target, "// second")
    assert list(np.flatnonzero(trace)) == [6]


def test_exit_one_is_rejected(stub_target):
    argv = stub_target("""
        sys.stderr.write('error: bad shader')
        sys.exit(1)
    """)
    with ExternalTarget(argv) as target:
        result = target.run("x")
    assert result.status == REJECTED
    assert 'bad shader' in result.message


def test_other_exit_code_is_a_crash(stub_target):
    argv = stub_target("""
        sys.stderr.write('==1==ERROR: AddressSanitizer\\n    #0 0x4f3a2b in tint::Resolver::Call file.cc:12\\n')
        sys.exit(3)
    """)
    with ExternalTarget(argv) as target:
        result = target.run("x")
    assert result.status == CRASHED
    assert result.exit_code == 3
    assert result.top_frame == 'tint::Resolver::Call'


def test_signal_is_a_crash(stub_target):
    argv = stub_target("""
        touch([42])
        os.kill(os.getpid(), signal_number)
    """.replace('signal_number', str(int(signal.SIGABRT))))
    with ExternalTarget(argv) as target:
        result, trace = run_external(target, "x")
    assert result.status == CRASHED
    assert result.signal == signal.SIGABRT
    assert signal_name(result.signal) == 'SIGABRT'
    assert trace[42] == 1


def test_stdin_delivery(stub_target):
    argv = stub_target("""
        sys.exit(0 if 'fn main' in source else 1)
    """, stdin=True)
    with ExternalTarget(argv, delivery='stdin') as target:
        assert target.run("fn main() {}").status == ACCEPTED
        assert target.run("nothing").status == REJECTED


def test_file_delivery_substitutes_input_path(stub_target):
    argv = stub_target("""
        sys.exit(0 if sys.argv[1].endswith('input.wgsl') and source == 'abc' else 1)
    """)
    with ExternalTarget(argv) as target:
        assert target.run("abc").status == ACCEPTED


@pytest.mark.slow
def test_hanging_target_times_out(stub_target):
    argv = stub_target("""
        import time
        time.sleep(30)
    """)
    with ExternalTarget(argv, timeout=0.5) as target:
        result = target.run("x")
    assert result.status == TIMED_OUT
    assert result.elapsed < 10


def test_missing_binary_raises():
    with pytest.raises(TargetError):
        ExternalTarget(['/nonexistent/wgsl-compiler', '{input}'])
    with pytest.raises(TargetError):
        ExternalTarget(['no-such-compiler-on-path-xyz'])


def test_bad_delivery_mode_raises(stub_target):
    with pytest.raises(TargetError):
        ExternalTarget(stub_target("sys.exit(0)"), delivery='socket')


def test_close_removes_shared_memory(stub_target):
    target = ExternalTarget(stub_target("sys.exit(0)"))
    assert os.path.exists(target.shm_path)
    target.close()
    assert not os.path.exists(target.shm_path)


def test_close_with_an_outside_view_is_logged(stub_target, caplog):
    target = ExternalTarget(stub_target("sys.exit(0)"))
    held = target.trace_bits
    with caplog.at_level(logging.WARNING, logger='ExternalTarget'):
        target.close()
    assert 'unmapping deferred' in caplog.text
    assert not os.path.exists(target.shm_path)
    assert held.shape == (65536,)
    assert not target.trace_bits.any()


def test_close_without_outside_views_is_quiet(stub_target, caplog):
    with caplog.at_level(logging.WARNING, logger='ExternalTarget'):
        with ExternalTarget(stub_target("sys.exit(0)")) as target:
            run_external(target, "fn f() {}")
    assert 'unmapping deferred' not in caplog.text


def test_region_is_external(stub_target):
    with ExternalTarget(stub_target("sys.exit(0)")) as target:
        assert target.region_of_edge(7) == 'external'


def test_helpers():
    assert signal_name(None) == ''
    assert signal_name(11) == 'SIGSEGV'
    assert top_frame("no report here") == ''
