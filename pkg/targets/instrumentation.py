"""
Branch-site instrumentation of the in-process reference target.

Each named branch site gets a fixed pseudo-random id. Hitting a site records
the edge ``prev ^ cur`` in a 64 KiB byte-counter map, with ``prev`` the
previous site's id shifted right by one. The layout is the same as the map
external AFL-instrumented targets write through shared memory.

Site names carry their region as a dotted prefix (``lexer.``, ``parser.``,
``parser.recovery.``, ``checker.``) so coverage can be attributed to the
tokenizer, the grammar, the parser's error recovery or the type checker.
"""

import zlib
from typing import Dict, Optional

import numpy as np

from config.config import MAP_SIZE


# most specific prefix first
REGIONS = ('parser.recovery', 'lexer', 'parser', 'checker')
EXTERNAL_REGION = 'external'
OTHER_REGION = 'other'


def site_id(site: str) -> int:
    """Fixed id of a branch site, stable across runs and processes."""
    return zlib.crc32(site.encode('utf-8')) & (MAP_SIZE - 1)


def region_of(site: str) -> str:
    for region in REGIONS:
        if site == region or site.startswith(region + '.'):
            return region
    return OTHER_REGION


class Tracer:
    """Records edges between consecutive branch-site hits into a counter map.

    Counters saturate at 255 instead of wrapping to zero.
    """

    def __init__(self, trace_bits: Optional[np.ndarray] = None):
        self.trace_bits = trace_bits if trace_bits is not None else np.zeros(MAP_SIZE, dtype=np.uint8)
        if self.trace_bits.shape != (MAP_SIZE,) or self.trace_bits.dtype != np.uint8:
            raise ValueError(f"trace map must be uint8[{MAP_SIZE}]")
        self.prev = 0
        # edge index -> region of the site that first produced it
        self.edge_regions: Dict[int, str] = {}
        self._ids: Dict[str, int] = {}
        self._regions: Dict[str, str] = {}

    def begin(self):
        """Start a new execution: clear the map and the edge history."""
        self.trace_bits.fill(0)
        self.prev = 0

    def hit(self, site: str):
        cur = self._ids.get(site)
        if cur is None:
            cur = self._ids[site] = site_id(site)
            self._regions[site] = region_of(site)
        edge = self.prev ^ cur
        if self.trace_bits[edge] != 255:
            self.trace_bits[edge] += 1
        if edge not in self.edge_regions:
            self.edge_regions[edge] = self._regions[site]
        self.prev = cur >> 1

    def edges(self) -> np.ndarray:
        """Indices of the nonzero counters of the current execution."""
        return np.flatnonzero(self.trace_bits)
