import pytest

from cli.reports import (
    ReportError, parse_stats, read_edges, merge_edges, report_correctness, report_coverage,
    report_exclusive, write_coverage_csv, execution_rate,
)
from engine.stats import ExecCounts, StatsWriter


def _record(elapsed, edges, accepted=0, rejected=0, crashes=0, timeouts=0):
    execs = accepted + rejected + crashes + timeouts
    return (f"timestamp={1700000000 + elapsed} elapsed={elapsed} execs={execs} edges={edges} corpus_size=1 "
            f"accepted={accepted} rejected={rejected} crashes={crashes} timeouts={timeouts}")


def _run(points, name='run'):
    return parse_stats([_record(t, e) for t, e in points], name)


def test_exec_counts():
    counts = ExecCounts()
    for status in ('accepted', 'rejected', 'rejected', 'crashed', 'timed-out'):
        counts.count(status)
    assert (counts.accepted, counts.rejected, counts.crashes, counts.timeouts) == (1, 2, 1, 1)
    assert counts.total == 5
    assert counts.correctness_rate == pytest.approx(0.2)
    assert ExecCounts().correctness_rate == 0.0


def test_stats_writer(tmp_path):
    path = tmp_path / 'out' / 'stats.txt'
    writer = StatsWriter(str(path), '# config seed=1', interval_s=3600, interval_execs=10)
    assert not writer.due(5)
    assert writer.due(10)
    counts = ExecCounts(accepted=6, rejected=4)
    writer.write(1.5, 10, 123, 4, counts)
    lines = path.read_text().splitlines()
    assert lines[0] == '# config seed=1'
    run = parse_stats(lines)
    assert run.header == '# config seed=1'
    assert run.last['edges'] == 123
    assert run.last['execs'] == run.last['accepted'] + run.last['rejected']
    assert not writer.due(15)


def test_parse_stats_skips_comments_and_blank_lines():
    run = parse_stats(['# config seed=3', '', '# note', _record(0, 1), _record(1, 4)])
    assert run.header == '# config seed=3'
    assert [r['edges'] for r in run.records] == [1, 4]


def test_missing_field_names_the_line():
    with pytest.raises(ReportError) as info:
        parse_stats([_record(0, 1), 'timestamp=1 elapsed=2 execs=3'], 'stats.txt')
    assert info.value.line == 2
    assert 'stats.txt:2' in str(info.value)


def test_decreasing_edges_are_corrupt():
    with pytest.raises(ReportError, match='decreases'):
        _run([(0, 10), (1, 9)])


def test_no_records_is_an_error():
    with pytest.raises(ReportError):
        parse_stats(['# config seed=0'])


def test_negative_count_is_an_error():
    with pytest.raises(ReportError):
        parse_stats([_record(0, 1).replace('rejected=0', 'rejected=-1')])


def test_single_run_coverage_reproduces_records():
    rows = report_coverage([_run([(0, 5), (2, 9), (4, 12)])])
    assert [(r.elapsed, r.median, r.low, r.high) for r in rows] == [(0, 5, 5, 5), (2, 9, 9, 9), (4, 12, 12, 12)]


def test_coverage_median_and_interval():
    runs = [_run([(0, 10)]), _run([(0, 20)]), _run([(0, 30)])]
    row = report_coverage(runs)[0]
    assert row.median == pytest.approx(20)
    assert row.low == pytest.approx(14)
    assert row.high == pytest.approx(26)
    assert row.runs == 3


def test_runs_are_aligned_on_elapsed_time():
    rows = report_coverage([_run([(0, 5), (2, 10)]), _run([(1, 7)])])
    assert [r.elapsed for r in rows] == [0, 1, 2]
    # before its first record a run has covered nothing
    assert rows[0].median == pytest.approx(2.5)
    assert rows[1].median == pytest.approx(6)
    assert rows[2].median == pytest.approx(8.5)


def test_coverage_csv(tmp_path):
    path = tmp_path / 'coverage.csv'
    write_coverage_csv(report_coverage([_run([(0, 5)])]), str(path))
    assert path.read_text().splitlines()[0] == 'elapsed,edges_median,edges_p20,edges_p80,runs'


def test_correctness_rate():
    run = parse_stats([_record(10, 3, accepted=150, rejected=850)])
    assert execution_rate(run.last) == pytest.approx(15.0)
    report = report_correctness([run, parse_stats([_record(10, 3, accepted=250, rejected=750)])])
    assert report.median == pytest.approx(20.0)
    assert report.std == pytest.approx(5.0)


def test_correctness_without_executions():
    assert report_correctness([_run([(0, 0)])]).empty


def test_exclusive_edges():
    result = report_exclusive({'full': {1, 2, 3}, 'ir-disabled': {3, 4}})
    assert result == {'full': 2, 'ir-disabled': 1}
    with pytest.raises(ReportError):
        report_exclusive({'full': {1}})


def test_edge_lists(tmp_path):
    (tmp_path / 'a').mkdir()
    (tmp_path / 'a' / 'edges.csv').write_text("edge,region\n1,lexer\n2,checker\n")
    (tmp_path / 'b.csv').write_text("edge,region\n2,checker\n5,parser\n")
    assert read_edges(str(tmp_path / 'a')) == {1, 2}
    assert read_edges(str(tmp_path / 'a'), region='checker') == {2}
    assert merge_edges([str(tmp_path / 'a'), str(tmp_path / 'b.csv')]) == {1, 2, 5}

    (tmp_path / 'bad.csv').write_text("edge,region\nx,lexer\n")
    with pytest.raises(ReportError):
        read_edges(str(tmp_path / 'bad.csv'))
    with pytest.raises(ReportError):
        read_edges(str(tmp_path / 'missing.csv'))
