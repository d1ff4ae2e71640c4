"""
Crash persistence and novelty admission.

Crashes are grouped under ``<output>/crashes/<key>/`` where the key is the
crash kind (signal name, internal-failure or exit status) plus a short hash of
the top stack frame, or of the crashing run's edge set when the target
reports no frame. The first input of a group is kept as ``input.wgsl``;
``meta.txt`` records key=value metadata and a hit count.
"""

import hashlib
import os
import time
from typing import Dict, Iterable, List, Optional

import numpy as np

from engine.executor import CRASH, Verdict
from engine.sample import Sample
from targets.base import RunResult
from targets.external import signal_name

CRASH_DIR_NAME = 'crashes'
CRASH_INPUT_NAME = 'input.wgsl'
CRASH_META_NAME = 'meta.txt'


def crash_key(result: RunResult, edges: Iterable[int] = ()) -> str:
    """Deduplication key of a crash."""
    if result.signal is not None:
        kind = signal_name(result.signal)
    elif result.reason == 'internal-failure':
        kind = 'internal-failure'
    else:
        kind = f"exit{result.exit_code}"
    if result.top_frame:
        digest = hashlib.sha1(result.top_frame.encode('utf-8')).hexdigest()
    else:
        digest = hashlib.sha1(','.join(str(e) for e in sorted(edges)).encode('ascii')).hexdigest()
    return f"{kind}-{digest[:12]}"


class CrashStore:
    """Deduplicated crash artifacts of one campaign."""

    def __init__(self, output_dir: str):
        self.directory = os.path.join(output_dir, CRASH_DIR_NAME)
        self.hits: Dict[str, int] = {}

    def __len__(self):
        return len(self.hits)

    def keys(self) -> List[str]:
        return sorted(self.hits)

    def save(self, sample: Sample, result: RunResult, trace: Optional[np.ndarray],
             exec_index: int = 0) -> str:
        """Record one crashing execution.

        Returns:
            The crash key; a new directory is created for unseen keys only
        """
        edges = np.flatnonzero(trace).tolist() if trace is not None else ()
        key = crash_key(result, edges)
        path = os.path.join(self.directory, key)
        first = key not in self.hits and not os.path.isdir(path)
        self.hits[key] = self.hits.get(key, 0) + 1
        os.makedirs(path, exist_ok=True)
        if first:
            with open(os.path.join(path, CRASH_INPUT_NAME), 'w', encoding='utf-8', errors='surrogateescape') as f:
                f.write(sample.source)
        self._write_meta(path, key, sample, result, exec_index)
        return key

    def _write_meta(self, path: str, key: str, sample: Sample, result: RunResult, exec_index: int):
        fields = {
            'key': key,
            'status': result.status,
            'reason': result.reason or '-',
            'signal': signal_name(result.signal) or '-',
            'exit_code': '-' if result.exit_code is None else result.exit_code,
            'top_frame': result.top_frame or '-',
            'layer': sample.layer,
            'operator': sample.operator,
            'parent': '-' if sample.parent is None else sample.parent,
            'exec': exec_index,
            'hits': self.hits[key],
            'time': f"{time.time():.3f}",
        }
        with open(os.path.join(path, CRASH_META_NAME), 'w', encoding='utf-8') as f:
            f.write('\n'.join(f"{k}={v}" for k, v in fields.items()) + '\n')
            if result.message:
                f.write('\n' + result.message.rstrip() + '\n')


def triage_and_admit(sample: Sample, verdict: Verdict, pending: List[Sample],
                     crash_store: Optional[CrashStore] = None, exec_index: int = 0) -> bool:
    """Persist crashes and queue novel samples for minimization.

    Args:
        sample: The executed sample
        verdict: Its verdict from Executor.run_one
        pending: Samples waiting for minimization; admitted samples are appended
        crash_store: Where crashes go (None drops them)
        exec_index: Main-loop execution counter, recorded with crashes

    Returns:
        True iff the sample was admitted (the verdict carries new edges)
    """
    if verdict.kind == CRASH and crash_store is not None:
        crash_store.save(sample, verdict.result, verdict.trace, exec_index)
    if not verdict.new_edges:
        return False
    sample.novel_edges = verdict.new_edges
    if verdict.result is not None:
        sample.exec_time = verdict.result.elapsed
    pending.append(sample)
    return True

