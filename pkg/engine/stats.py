"""
Periodic stats records.

The stats file starts with the campaign's config echo line (``# config ...``)
followed by one record per line:

    timestamp=<unix s> elapsed=<s> execs=<n> edges=<n> corpus_size=<n>
    accepted=<n> rejected=<n> crashes=<n> timeouts=<n>

Counts are cumulative over main-loop executions, so
accepted + rejected + crashes + timeouts == execs for every record.
"""

import os
import time
from dataclasses import dataclass
from typing import Dict

from config.config import STATS_INTERVAL_EXECS, STATS_INTERVAL_S
from targets.base import ACCEPTED, CRASHED, REJECTED, TIMED_OUT
from util.error_utils import format_kv_line

STATS_FIELDS = ('timestamp', 'elapsed', 'execs', 'edges', 'corpus_size',
                'accepted', 'rejected', 'crashes', 'timeouts')


@dataclass
class ExecCounts:
    accepted: int = 0
    rejected: int = 0
    crashes: int = 0
    timeouts: int = 0

    def count(self, status: str):
        if status == ACCEPTED:
            self.accepted += 1
        elif status == REJECTED:
            self.rejected += 1
        elif status == CRASHED:
            self.crashes += 1
        elif status == TIMED_OUT:
            self.timeouts += 1

    @property
    def total(self) -> int:
        return self.accepted + self.rejected + self.crashes + self.timeouts

    @property
    def correctness_rate(self) -> float:
        return self.accepted / self.total if self.total else 0.0


class StatsWriter:
    """Appends records every STATS_INTERVAL_S seconds or STATS_INTERVAL_EXECS executions."""

    def __init__(self, path: str, header: str, interval_s: float = STATS_INTERVAL_S,
                 interval_execs: int = STATS_INTERVAL_EXECS):
        self.path = path
        self.interval_s = interval_s
        self.interval_execs = interval_execs
        self._last_time = time.monotonic()
        self._last_execs = 0
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            f.write(header + '\n')

    def due(self, execs: int) -> bool:
        return (execs - self._last_execs >= self.interval_execs
                or time.monotonic() - self._last_time >= self.interval_s)

    def write(self, elapsed: float, execs: int, edges: int, corpus_size: int,
              counts: ExecCounts) -> Dict[str, str]:
        record = {
            'timestamp': f"{time.time():.3f}",
            'elapsed': f"{elapsed:.3f}",
            'execs': str(execs),
            'edges': str(edges),
            'corpus_size': str(corpus_size),
            'accepted': str(counts.accepted),
            'rejected': str(counts.rejected),
            'crashes': str(counts.crashes),
            'timeouts': str(counts.timeouts),
        }
        with open(self.path, 'a', encoding='utf-8') as f:
            f.write(format_kv_line(record) + '\n')
        self._last_time = time.monotonic()
        self._last_execs = execs
        return record
