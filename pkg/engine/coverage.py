"""
Edge-coverage feedback.

Raw counters of one execution are classified into AFL-style hit-count
buckets (1, 2, 3, 4-7, 8-15, 16-31, 32-127, 128+), one bit per bucket. The
global map keeps, per edge, the bucket bits seen so far; an execution is
novel when it sets a bit the global map lacks.
"""

from typing import FrozenSet

import numpy as np

from config.config import MAP_SIZE, BUCKET_BOUNDS


def _bucket_table() -> np.ndarray:
    table = np.zeros(256, dtype=np.uint8)
    bucket = 0
    for count in range(1, 256):
        while count > BUCKET_BOUNDS[bucket]:
            bucket += 1
        table[count] = 1 << bucket
    return table


BUCKET_TABLE = _bucket_table()


def classify_counts(trace_bits: np.ndarray) -> np.ndarray:
    """Bucket bit of every counter (0 for edges not hit)."""
    return BUCKET_TABLE[trace_bits]


class CoverageMap:
    """Bucket bits seen over a whole campaign. Only ever grows."""

    def __init__(self, size: int = MAP_SIZE):
        self.seen = np.zeros(size, dtype=np.uint8)

    def new_edges(self, trace_bits: np.ndarray) -> FrozenSet[int]:
        """Edges of `trace_bits` that reach a bucket not seen before (map unchanged)."""
        fresh = classify_counts(trace_bits) & ~self.seen
        return frozenset(np.flatnonzero(fresh).tolist())

    def merge(self, trace_bits: np.ndarray) -> int:
        """Add an execution's buckets; returns the number of newly covered edges."""
        before = self.covered()
        np.bitwise_or(self.seen, classify_counts(trace_bits), out=self.seen)
        return self.covered() - before

    def covered(self) -> int:
        return int(np.count_nonzero(self.seen))

    def covered_edges(self) -> np.ndarray:
        return np.flatnonzero(self.seen)
