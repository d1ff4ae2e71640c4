import numpy as np

from config.config import MAP_SIZE
from engine.coverage import CoverageMap, classify_counts


def _trace(**counts):
    bits = np.zeros(MAP_SIZE, dtype=np.uint8)
    for edge, count in counts.items():
        bits[int(edge[1:])] = count
    return bits


def test_bucket_bits():
    counts = np.array([0, 1, 2, 3, 4, 7, 8, 15, 16, 31, 32, 127, 128, 255], dtype=np.uint8)
    assert classify_counts(counts).tolist() == [0, 1, 2, 4, 8, 8, 16, 16, 32, 32, 64, 64, 128, 128]


def test_new_edges_does_not_touch_the_map():
    cov = CoverageMap()
    trace = _trace(e10=1, e20=5)
    assert cov.new_edges(trace) == {10, 20}
    assert cov.covered() == 0


def test_merge_grows_and_reports_new_edges():
    cov = CoverageMap()
    assert cov.merge(_trace(e10=1, e20=5)) == 2
    assert cov.merge(_trace(e10=1, e30=1)) == 1
    assert cov.covered() == 3
    assert cov.covered_edges().tolist() == [10, 20, 30]


def test_new_bucket_is_novel_but_same_bucket_is_not():
    cov = CoverageMap()
    cov.merge(_trace(e10=4))
    assert cov.new_edges(_trace(e10=6)) == frozenset()
    assert cov.new_edges(_trace(e10=9)) == {10}
    # a new bucket on a known edge is novelty, not a newly covered edge
    assert cov.merge(_trace(e10=9)) == 0


def test_map_never_shrinks():
    cov = CoverageMap()
    cov.merge(_trace(e1=1, e2=2))
    before = cov.seen.copy()
    cov.merge(_trace())
    cov.merge(_trace(e3=200))
    assert np.all((cov.seen & before) == before)
