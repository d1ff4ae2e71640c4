"""
Second minimization phase: shrink an admitted sample while it still
exercises every one of its stable novel edges.
"""

from typing import FrozenSet, Optional

from engine.executor import Executor
from engine.sample import AST, Sample, render
from ir.minimize import minimize_ir
from syntax.minimize import minimize_ast
from util.log_utils import log_debug

NAME = 'Minimizer'


def minimize(sample: Sample, executor: Executor, stable_edges: FrozenSet[int],
             max_checks: Optional[int] = None, log_queue=None) -> Sample:
    """Smallest representation found that keeps `stable_edges` exercised.

    Args:
        sample: Admitted sample (not modified)
        executor: Executor bound to the campaign target
        stable_edges: Result of Executor.stable_novel_edges for `sample`
        max_checks: Cap on executions spent on this sample; 0 admits it as is
        log_queue: Optional log queue

    Returns:
        A sample with the same lineage and ``novel_edges == stable_edges``. It
        is the input unminimized and flagged when there is nothing to
        preserve or the input itself no longer reaches the edges.
    """
    if not stable_edges:
        out = sample.with_payload(sample.payload)
        out.flagged = True
        return out
    if max_checks == 0:
        out = sample.with_payload(sample.payload)
        out.novel_edges = stable_edges
        out.flagged = False
        return out

    def keep(payload) -> bool:
        return executor.reaches(render(sample.layer, payload), stable_edges)

    if not keep(sample.payload):
        log_debug(log_queue, NAME, f"sample {sample.source[:40]!r}... lost its edges on re-run")
        out = sample.with_payload(sample.payload)
        out.flagged = True
        out.novel_edges = stable_edges
        return out

    budget = None if max_checks is None else max(0, max_checks - 1)
    if sample.layer == AST:
        reduced = minimize_ast(sample.payload, keep, budget)
        before, after = sample.payload.node_count(), reduced.node_count()
    else:
        reduced = minimize_ir(sample.payload, keep, budget)
        before, after = sample.payload.size(), reduced.size()
    if after > before:
        reduced = sample.payload

    out = sample.with_payload(reduced)
    out.novel_edges = stable_edges
    out.flagged = False
    log_debug(log_queue, NAME, f"{sample.layer} sample {before} -> {min(before, after)}")
    return out
