"""
Execution of one sample against a target and classification of the result.
"""

from dataclasses import dataclass
from typing import FrozenSet, Iterable, Optional

import numpy as np

from config.config import MAX_OUTPUT_BYTES, STABILITY_REPEATS
from engine.coverage import CoverageMap
from targets.base import CRASHED, TIMED_OUT, RunResult, Target, TargetError

CRASH = 'crash'
NOVEL = 'novel'
BORING = 'boring'


class EngineError(Exception):
    """The engine cannot continue (the target cannot be started)."""


@dataclass(frozen=True)
class Verdict:
    kind: str  # CRASH | NOVEL | BORING
    status: str  # front-end outcome, one of targets.base.RUN_STATUSES ('' when skipped)
    new_edges: FrozenSet[int] = frozenset()
    result: Optional[RunResult] = None
    skipped: bool = False  # oversized text, never executed
    trace: Optional[np.ndarray] = None  # counters of this run, kept for crash and novel verdicts

    @property
    def novel(self) -> bool:
        return bool(self.new_edges)


class Executor:
    """Runs sources on a target and judges them against the global coverage map."""

    def __init__(self, target: Target, coverage: CoverageMap, max_output_bytes: int = MAX_OUTPUT_BYTES):
        self.target = target
        self.coverage = coverage
        self.max_output_bytes = max_output_bytes
        self.runs = 0  # every execution, calibration and minimization included

    def _execute(self, source: str) -> RunResult:
        self.runs += 1
        try:
            return self.target.run(source)
        except TargetError as e:
            raise EngineError(f"target '{self.target.name}' failed to run: {e}") from e

    def run_one(self, source: str) -> Verdict:
        """Execute `source` once.

        Timeouts are boring whatever they covered. Crashes keep their new
        edges so admission can follow the novelty flag independently.

        Raises:
            EngineError: If the target cannot be spawned
        """
        if len(source.encode('utf-8', errors='surrogatepass')) > self.max_output_bytes:
            return Verdict(BORING, '', skipped=True)
        result = self._execute(source)
        if result.status == TIMED_OUT:
            return Verdict(BORING, TIMED_OUT, result=result)
        new = self.coverage.new_edges(self.target.trace_bits)
        if result.status == CRASHED:
            return Verdict(CRASH, CRASHED, new, result, trace=self.target.trace_bits.copy())
        if new:
            return Verdict(NOVEL, result.status, new, result, trace=self.target.trace_bits.copy())
        return Verdict(BORING, result.status, frozenset(), result)

    def stable_novel_edges(self, source: str, repeats: int = STABILITY_REPEATS,
                           initial: Optional[Iterable[int]] = None) -> FrozenSet[int]:
        """Novel edges seen in every one of `repeats` executions.

        Args:
            source: Sample text
            repeats: Total executions, the one that produced `initial` included
            initial: Novel edges of an execution already done; run once more if None

        Raises:
            EngineError: If the target cannot be spawned
        """
        if initial is None:
            self._execute(source)
            initial = self.coverage.new_edges(self.target.trace_bits)
        stable = set(initial)
        repeats -= 1
        while stable and repeats > 0:
            self._execute(source)
            stable &= self.coverage.new_edges(self.target.trace_bits)
            repeats -= 1
        return frozenset(stable)

    def reaches(self, source: str, edges: Iterable[int]) -> bool:
        """True if one execution of `source` exercises every edge in `edges`."""
        if len(source.encode('utf-8', errors='surrogatepass')) > self.max_output_bytes:
            return False
        result = self._execute(source)
        if result.status == TIMED_OUT:
            return False
        trace = self.target.trace_bits
        return all(trace[e] for e in edges)

    def absorb(self, source: str) -> int:
        """Execute `source` and merge its coverage into the global map (corpus resume)."""
        self._execute(source)
        return self.coverage.merge(self.target.trace_bits)

    def edge_set(self, source: str) -> FrozenSet[int]:
        """Edges one execution of `source` touches."""
        self._execute(source)
        return frozenset(np.flatnonzero(self.target.trace_bits).tolist())
