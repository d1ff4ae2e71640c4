"""
Report subcommands: pure transforms of stats files and edge lists.

* coverage    covered edges over time; several stats files (repetitions) are
              aligned on their elapsed times and summarized per time point by
              the median and the central 60 % interval (20th to 80th percentile)
* correctness execution-level acceptance rate per run, median and standard
              deviation over runs
* exclusive   per configuration, the edges no other configuration covers
"""

import csv
import os
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from config.config import EDGES_FILE_NAME, STATS_FILE_NAME
from engine.stats import STATS_FIELDS
from util.error_utils import parse_kv_line

COVERAGE_CSV = 'coverage.csv'
CORRECTNESS_CSV = 'correctness.csv'
EXCLUSIVE_CSV = 'exclusive.csv'

INTERVAL_LOW = 20
INTERVAL_HIGH = 80

_INT_FIELDS = ('execs', 'edges', 'corpus_size', 'accepted', 'rejected', 'crashes', 'timeouts')


class ReportError(ValueError):
    """Malformed report input."""

    def __init__(self, message: str, path: str = '', line: Optional[int] = None):
        self.path = path
        self.line = line
        where = f"{path}:{line}: " if line is not None else (f"{path}: " if path else '')
        super().__init__(where + message)


# ============================================================================
# Stats files
# ============================================================================

@dataclass
class StatsRun:
    path: str
    header: str = ''
    records: List[Dict[str, float]] = field(default_factory=list)

    @property
    def last(self) -> Dict[str, float]:
        return self.records[-1]


def parse_stats(lines: Iterable[str], path: str = '<stats>') -> StatsRun:
    """Parse a stats stream.

    Raises:
        ReportError: On a malformed record, decreasing edge counts, or no records
    """
    run = StatsRun(path)
    previous_edges = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith('#'):
            if not run.header and line.startswith('# config'):
                run.header = line
            continue
        try:
            values = parse_kv_line(line, STATS_FIELDS, 'stats record')
            record = {k: float(values[k]) for k in ('timestamp', 'elapsed')}
            record.update({k: int(values[k]) for k in _INT_FIELDS})
        except ValueError as e:
            raise ReportError(str(e), path, lineno)
        if any(record[k] < 0 for k in _INT_FIELDS):
            raise ReportError("negative count", path, lineno)
        if previous_edges is not None and record['edges'] < previous_edges:
            raise ReportError(f"edge count decreases ({previous_edges} -> {record['edges']}), stats file is corrupt",
                              path, lineno)
        previous_edges = record['edges']
        run.records.append(record)
    if not run.records:
        raise ReportError("no stats records", path)
    return run


def read_stats(path: str) -> StatsRun:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return parse_stats(f, path)
    except OSError as e:
        raise ReportError(f"cannot read stats file: {e}", path)


def resolve_stats_path(path: str) -> str:
    """A campaign output directory stands for its stats file."""
    return os.path.join(path, STATS_FILE_NAME) if os.path.isdir(path) else path


# ============================================================================
# Coverage over time
# ============================================================================

@dataclass
class CoverageRow:
    elapsed: float
    median: float
    low: float
    high: float
    runs: int


def _edges_at(run: StatsRun, times: np.ndarray) -> np.ndarray:
    """Step function: edge count of the last record at or before each time."""
    elapsed = np.array([r['elapsed'] for r in run.records])
    edges = np.array([r['edges'] for r in run.records], dtype=float)
    index = np.searchsorted(elapsed, times, side='right') - 1
    return np.where(index >= 0, edges[np.clip(index, 0, None)], 0.0)


def report_coverage(runs: Sequence[StatsRun]) -> List[CoverageRow]:
    """Covered edges over time, one row per distinct elapsed time.

    A single run reproduces its records; several runs are summarized by the
    per-time median and 20th/80th percentiles.
    """
    if not runs:
        raise ReportError("no stats files given")
    times = np.unique(np.concatenate([[r['elapsed'] for r in run.records] for run in runs]))
    matrix = np.vstack([_edges_at(run, times) for run in runs])
    median = np.median(matrix, axis=0)
    low = np.percentile(matrix, INTERVAL_LOW, axis=0)
    high = np.percentile(matrix, INTERVAL_HIGH, axis=0)
    return [CoverageRow(float(t), float(m), float(lo), float(hi), len(runs))
            for t, m, lo, hi in zip(times, median, low, high)]


def coverage_table(rows: Sequence[CoverageRow]) -> str:
    lines = [f"{'elapsed_s':>10}  {'edges':>8}  {'p20':>8}  {'p80':>8}  {'runs':>4}"]
    for row in rows:
        lines.append(f"{row.elapsed:10.1f}  {row.median:8.1f}  {row.low:8.1f}  {row.high:8.1f}  {row.runs:4d}")
    return '\n'.join(lines)


def write_coverage_csv(rows: Sequence[CoverageRow], path: str):
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f)
        writer.writerow(['elapsed', 'edges_median', 'edges_p20', 'edges_p80', 'runs'])
        for row in rows:
            writer.writerow([f"{row.elapsed:.3f}", f"{row.median:g}", f"{row.low:g}", f"{row.high:g}", row.runs])


# ============================================================================
# Semantic correctness rate
# ============================================================================

@dataclass
class CorrectnessReport:
    rates: List[Tuple[str, float, int]]  # (path, percent, executions)
    median: Optional[float] = None
    std: Optional[float] = None

    @property
    def empty(self) -> bool:
        return not self.rates


def execution_rate(record: Dict[str, float]) -> Optional[float]:
    """Accepted share of executions in percent; None without executions."""
    total = record['accepted'] + record['rejected'] + record['crashes'] + record['timeouts']
    if total == 0:
        return None
    return 100.0 * record['accepted'] / total


def report_correctness(runs: Sequence[StatsRun]) -> CorrectnessReport:
    """Rate of each run from its final record; runs without executions are left out."""
    rates = []
    for run in runs:
        rate = execution_rate(run.last)
        if rate is not None:
            total = run.last['accepted'] + run.last['rejected'] + run.last['crashes'] + run.last['timeouts']
            rates.append((run.path, rate, int(total)))
    if not rates:
        return CorrectnessReport([])
    values = np.array([r[1] for r in rates])
    return CorrectnessReport(rates, float(np.median(values)), float(np.std(values)))


def correctness_table(report: CorrectnessReport) -> str:
    if report.empty:
        return "no executions recorded"
    lines = [f"{'rate_%':>8}  {'execs':>10}  run"]
    for path, rate, total in report.rates:
        lines.append(f"{rate:8.2f}  {total:10d}  {path}")
    lines.append(f"median {report.median:.2f}%  std {report.std:.2f}")
    return '\n'.join(lines)


def write_correctness_csv(report: CorrectnessReport, path: str):
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f)
        writer.writerow(['run', 'rate_percent', 'execs'])
        for run_path, rate, total in report.rates:
            writer.writerow([run_path, f"{rate:.4f}", total])
        if not report.empty:
            writer.writerow(['median', f"{report.median:.4f}", ''])
            writer.writerow(['std', f"{report.std:.4f}", ''])


# ============================================================================
# Exclusive coverage
# ============================================================================

def read_edges(path: str, region: Optional[str] = None) -> Set[int]:
    """Edges of an ``edges.csv`` (or a campaign directory holding one).

    Raises:
        ReportError: If the file is unreadable or a row is malformed
    """
    if os.path.isdir(path):
        path = os.path.join(path, EDGES_FILE_NAME)
    edges = set()
    try:
        with open(path, 'r', newline='', encoding='utf-8') as f:
            for lineno, row in enumerate(csv.reader(f), start=1):
                if not row or (lineno == 1 and row[0] == 'edge'):
                    continue
                if len(row) < 2:
                    raise ReportError("expected 'edge,region'", path, lineno)
                try:
                    edge = int(row[0])
                except ValueError:
                    raise ReportError(f"bad edge index '{row[0]}'", path, lineno)
                if region is None or row[1] == region:
                    edges.add(edge)
    except OSError as e:
        raise ReportError(f"cannot read edge list: {e}", path)
    return edges


def merge_edges(paths: Iterable[str], region: Optional[str] = None) -> Set[int]:
    """Union over the repetitions of one configuration."""
    merged = set()
    for path in paths:
        merged |= read_edges(path, region)
    return merged


def report_exclusive(sets: Dict[str, Set[int]]) -> Dict[str, int]:
    """Per configuration, the number of edges covered by it and by no other one.

    Raises:
        ReportError: With fewer than two configurations
    """
    if len(sets) < 2:
        raise ReportError("exclusive coverage needs at least two configurations")
    out = {}
    for name, edges in sets.items():
        others = set()
        for other, other_edges in sets.items():
            if other != name:
                others |= other_edges
        out[name] = len(edges - others)
    return out


def exclusive_table(sets: Dict[str, Set[int]], exclusive: Dict[str, int]) -> str:
    width = max(len(n) for n in sets)
    lines = [f"{'config':<{width}}  {'edges':>8}  {'exclusive':>9}"]
    for name in sets:
        lines.append(f"{name:<{width}}  {len(sets[name]):8d}  {exclusive[name]:9d}")
    return '\n'.join(lines)


def write_exclusive_csv(sets: Dict[str, Set[int]], exclusive: Dict[str, int], path: str):
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f)
        writer.writerow(['config', 'edges', 'exclusive'])
        for name in sets:
            writer.writerow([name, len(sets[name]), exclusive[name]])
