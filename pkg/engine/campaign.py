"""
Campaign driver: seed import, generator fill and the fuzzing loop.

One iteration schedules a (sample, operator) pair, applies a stack of
mutations from the sample's layer, renders the child to WGSL, runs it and
triages the verdict. Novel children are checked for stable edges, minimized
within a campaign-wide allowance and only then inserted into the corpus; the first run's coverage is merged
into the global map afterwards, so every admitted sample's edges were new at
admission time.

Only executions of candidates count as campaign executions (stats, budget,
correctness rate). Stability checks and minimization runs are tallied
separately as calibration runs.
"""

import os
import random
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from config.campaign_config import CampaignConfig, CampaignConfigManager
from config.config import (
    CALIBRATION_RATIO, EDGES_FILE_NAME, REPORT_FILE_NAME, STATS_FILE_NAME, QUEUE_PUT_TIMEOUT,
)
from engine.corpus import Corpus, CorpusStore
from engine.coverage import CoverageMap
from engine.executor import Executor, Verdict
from engine.minimize import minimize
from engine.sample import AST, IR, ORIGIN_GENERATOR, Sample, twin_of
from engine.scheduler import OPERATORS_BY_LAYER, SchedulerState, schedule_next, stack_depth
from engine.seeds import import_seeds
from engine.stats import ExecCounts, StatsWriter
from engine.triage import CrashStore, triage_and_admit
from ir.generator import GenerationLimits, generate_module
from ir.mutations import mutate_ir
from syntax.dictionary import default_dictionary
from syntax.mutations import AstMutationContext, mutate_ast
from targets.base import Target, make_target
from util.error_utils import format_kv_line, safe_queue_put
from util.log_utils import log_debug, log_info, log_warning

NAME = 'Campaign'
NOOP_LIMIT = 8  # consecutive iterations without an applicable mutation before generating afresh


@dataclass
class CampaignReport:
    config: CampaignConfig
    execs: int = 0
    calibration_execs: int = 0
    skipped: int = 0
    elapsed: float = 0.0
    edges: int = 0
    corpus_size: int = 0
    flagged: int = 0
    counts: ExecCounts = field(default_factory=ExecCounts)
    crash_keys: List[str] = field(default_factory=list)
    applied_operators: Dict[str, int] = field(default_factory=dict)
    first_applied: Dict[str, int] = field(default_factory=dict)  # operator -> exec index
    trajectory: List[int] = field(default_factory=list)  # covered edges after each execution
    stop_reason: str = ''

    @property
    def correctness_rate(self) -> float:
        return self.counts.correctness_rate

    def summary(self) -> Dict[str, str]:
        return {
            'seed': str(self.config.seed),
            'ablation': str(self.config.ablation),
            'execs': str(self.execs),
            'calibration_execs': str(self.calibration_execs),
            'skipped': str(self.skipped),
            'elapsed': f"{self.elapsed:.3f}",
            'edges': str(self.edges),
            'corpus_size': str(self.corpus_size),
            'flagged': str(self.flagged),
            'accepted': str(self.counts.accepted),
            'rejected': str(self.counts.rejected),
            'crashes': str(self.counts.crashes),
            'timeouts': str(self.counts.timeouts),
            'unique_crashes': str(len(self.crash_keys)),
            'correctness_rate': f"{self.correctness_rate:.4f}",
            'stop_reason': self.stop_reason or '-',
        }

    def write(self, path: str):
        with open(path, 'w', encoding='utf-8') as f:
            f.write(self.config.header() + '\n')
            f.write(format_kv_line(self.summary()) + '\n')
            for name in sorted(self.applied_operators):
                f.write(format_kv_line({'operator': name, 'applied': self.applied_operators[name],
                                        'first_exec': self.first_applied.get(name, -1)}) + '\n')
            for key in self.crash_keys:
                f.write(format_kv_line({'crash': key}) + '\n')


class Campaign:
    """One campaign instance; single-threaded.

    Args:
        config: Campaign settings (validated in ``run``)
        target: Target to use instead of building one from the config
        log_queue: Optional log queue (multi-instance mode)
        status_queue: Optional queue receiving ('stats', instance, record) tuples
        stop_event: Optional event that ends the loop early
        record_trajectory: Keep the covered-edge count after every execution
    """

    def __init__(self, config: CampaignConfig, target: Optional[Target] = None, log_queue=None,
                 status_queue=None, stop_event=None, record_trajectory: bool = False, name: str = NAME):
        self.config = config
        self.target = target
        self._owns_target = target is None
        self.log_queue = log_queue
        self.status_queue = status_queue
        self.stop_event = stop_event
        self.record_trajectory = record_trajectory
        self.name = name

        self.rng: Optional[random.Random] = None
        self.coverage = CoverageMap()
        self.executor: Optional[Executor] = None
        self.corpus = Corpus()
        self.store: Optional[CorpusStore] = None
        self.crashes: Optional[CrashStore] = None
        self.scheduler = SchedulerState()
        self.counts = ExecCounts()
        self.execs = 0
        self.skipped = 0
        self.minimize_runs = 0
        self.applied = Counter()
        self.first_applied: Dict[str, int] = {}
        self.trajectory: List[int] = []
        self._start = 0.0
        self._stats: Optional[StatsWriter] = None
        self._pending: List[Sample] = []
        self._dictionary = default_dictionary()
        self._limits = GenerationLimits(
            max_types=config.max_types,
            max_functions=config.max_functions,
            max_statements=config.max_statements,
            max_globals=config.max_globals,
        )

    # ------------------------------------------------------------------
    # budget and bookkeeping
    # ------------------------------------------------------------------

    def elapsed(self) -> float:
        return time.monotonic() - self._start

    def _stop_reason(self) -> str:
        if self.stop_event is not None and self.stop_event.is_set():
            return 'stopped'
        if self.config.max_execs is not None and self.execs >= self.config.max_execs:
            return 'max_execs'
        if self.config.max_time is not None and self.elapsed() >= self.config.max_time:
            return 'max_time'
        return ''

    def _emit_stats(self, force: bool = False):
        if self._stats is None or not (force or self._stats.due(self.execs)):
            return
        record = self._stats.write(self.elapsed(), self.execs, self.coverage.covered(),
                                   len(self.corpus), self.counts)
        safe_queue_put(self.status_queue, ('stats', self.name, record), timeout=QUEUE_PUT_TIMEOUT)

    # ------------------------------------------------------------------
    # candidates
    # ------------------------------------------------------------------

    def _process(self, sample: Sample) -> Verdict:
        """Run one candidate; admit, minimize and insert it when novel."""
        verdict = self.executor.run_one(sample.source)
        if verdict.skipped:
            self.skipped += 1
            return verdict
        self.execs += 1
        self.counts.count(verdict.status)
        if triage_and_admit(sample, verdict, self._pending, self.crashes, self.execs):
            while self._pending:
                self._settle(self._pending.pop(0))
        if verdict.trace is not None:
            self.coverage.merge(verdict.trace)
        if self.record_trajectory:
            self.trajectory.append(self.coverage.covered())
        self._emit_stats()
        return verdict

    def _minimize_budget(self, sample: Sample) -> int:
        """Keep-checks `sample` may spend on minimization; 0 admits it as is.

        Generated samples are already bounded by the generation limits. Every
        other minimization draws on an allowance of CALIBRATION_RATIO runs
        per candidate execution so far.
        """
        if sample.operator == ORIGIN_GENERATOR:
            return 0
        allowance = int(CALIBRATION_RATIO * self.execs) - self.minimize_runs
        return max(0, min(self.config.minimize_max_execs, allowance))

    def _settle(self, sample: Sample):
        stable = self.executor.stable_novel_edges(sample.source, self.config.stability_repeats,
                                                  initial=sample.novel_edges)
        runs = self.executor.runs
        admitted = minimize(sample, self.executor, stable, self._minimize_budget(sample), self.log_queue)
        self.minimize_runs += self.executor.runs - runs
        self._insert(admitted)
        if admitted.layer == IR and admitted.operator == ORIGIN_GENERATOR:
            # the twin shares the module's edges, no calibration of its own
            twin = twin_of(admitted)
            if twin is not None:
                twin.flagged = admitted.flagged
                self._insert(twin)

    def _insert(self, sample: Sample) -> Sample:
        sample.created_exec = self.execs
        sample.created_time = self.elapsed()
        self.corpus.add(sample)
        self.store.save(sample)
        log_debug(self.log_queue, self.name,
                  f"admitted #{sample.id} {sample.layer} op={sample.operator} edges={len(sample.novel_edges)}"
                  f"{' (unminimized)' if sample.flagged else ''}")
        return sample

    def _generated(self) -> Sample:
        return Sample(IR, generate_module(self.rng, self._limits), operator=ORIGIN_GENERATOR)

    def _fresh_candidate(self, layers) -> Sample:
        """Generated sample; its syntax-tree twin when IR mutation is off."""
        sample = self._generated()
        if IR not in layers:
            twin = twin_of(sample)
            if twin is not None:
                twin.operator = ORIGIN_GENERATOR
                twin.parent = None
                return twin
        return sample

    def _mutated(self, sample: Sample, first_operator: str) -> Optional[Sample]:
        """Stack of 1..STACK_MAX mutations of `sample`; None if none applied."""
        operators = OPERATORS_BY_LAYER[sample.layer]
        payload = sample.payload
        applied = []
        ctx = None
        if sample.layer == AST:
            ctx = AstMutationContext(dictionary=self._dictionary, donors=self.corpus.trees(),
                                     max_nodes=self.config.max_ast_nodes, max_depth=self.config.max_ast_depth)
        for i in range(stack_depth(self.rng)):
            operator = first_operator if i == 0 else self.scheduler.choose_operator(operators, self.rng)
            if sample.layer == AST:
                result = mutate_ast(payload, ctx.donors, self.rng, operator=operator, ctx=ctx)
            else:
                result = mutate_ir(payload, self.rng, operator=operator)
            if result.applied:
                payload = result.tree
                applied.append(result.operator)
        if not applied:
            return None
        for name in applied:
            self.applied[name] += 1
            self.first_applied.setdefault(name, self.execs + 1)
        child = sample.derive(payload, '+'.join(applied))
        child.meta['operators'] = applied
        return child

    # ------------------------------------------------------------------
    # phases
    # ------------------------------------------------------------------

    def _prepare(self):
        cfg = self.config.validate()
        os.makedirs(cfg.output_dir, exist_ok=True)
        CampaignConfigManager.for_output(cfg.output_dir).save(cfg)
        if self.target is None:
            self.target = make_target(cfg)
        self.rng = random.Random(cfg.seed)
        self.executor = Executor(self.target, self.coverage)
        self.store = CorpusStore(cfg.output_dir, self.log_queue)
        self.crashes = CrashStore(cfg.output_dir)
        self._start = time.monotonic()
        self._stats = StatsWriter(os.path.join(cfg.output_dir, STATS_FILE_NAME), cfg.header())

    def _resume(self) -> bool:
        if not self.config.resume:
            return False
        self.corpus = self.store.load_all()
        for sample in self.corpus:
            self.executor.absorb(sample.source)
        log_info(self.log_queue, self.name,
                 f"resumed {len(self.corpus)} samples, {self.coverage.covered()} edges")
        return len(self.corpus) > 0

    def _fill(self):
        """Seed import, then generator fill."""
        if self.config.seeds_dir:
            try:
                seeds = import_seeds(self.config.seeds_dir, self.log_queue)
            except OSError as e:
                log_warning(self.log_queue, self.name, f"cannot read seed directory: {e}")
                seeds = []
            for sample in seeds:
                if self._stop_reason():
                    return
                self._process(sample)
        for _ in range(self.config.generator_count):
            if self._stop_reason():
                return
            self._process(self._generated())

    def _loop(self):
        noops = 0
        while not self._stop_reason():
            layers = self.config.ablation.enabled_layers(self.execs, self.elapsed())
            pick = schedule_next(self.corpus, self.scheduler, self.rng, layers, self.config.deterministic)
            if pick is None or noops >= NOOP_LIMIT:
                noops = 0
                self._process(self._fresh_candidate(layers))
                continue
            sample, operator = pick
            child = self._mutated(sample, operator)
            if child is None:
                noops += 1
                continue
            noops = 0
            verdict = self._process(child)
            for name in set(child.meta['operators']):
                self.scheduler.record(name, verdict.novel)

    def run(self) -> CampaignReport:
        """Run until the budget is spent or the stop event is set.

        Raises:
            ConfigError: Before any execution, on an invalid config
            TargetError: If the configured target cannot be set up
            EngineError: If the target cannot be spawned mid-campaign
        """
        self._prepare()
        cfg = self.config
        print(f"[{self.name}] Starting: target={cfg.target} seed={cfg.seed} ablation={cfg.ablation} "
              f"output={cfg.output_dir}")
        log_info(self.log_queue, self.name, f"starting campaign, config: {cfg.header()}")
        try:
            self._emit_stats(force=True)
            if not self._resume():
                self._fill()
            self._loop()
        finally:
            if self._owns_target and self.target is not None:
                self.target.close()
        report = self._report(self._stop_reason())
        self._emit_stats(force=True)
        report.write(os.path.join(cfg.output_dir, REPORT_FILE_NAME))
        self._write_edges(os.path.join(cfg.output_dir, EDGES_FILE_NAME))
        log_info(self.log_queue, self.name, f"finished: {format_kv_line(report.summary())}")
        print(f"[{self.name}] Finished after {report.execs} execs: {report.edges} edges, "
              f"{report.corpus_size} samples, {len(report.crash_keys)} unique crashes, "
              f"correctness {100 * report.correctness_rate:.1f}%")
        return report

    def _report(self, stop_reason: str) -> CampaignReport:
        return CampaignReport(
            config=self.config,
            execs=self.execs,
            calibration_execs=self.executor.runs - self.execs,
            skipped=self.skipped,
            elapsed=self.elapsed(),
            edges=self.coverage.covered(),
            corpus_size=len(self.corpus),
            flagged=sum(1 for s in self.corpus if s.flagged),
            counts=self.counts,
            crash_keys=self.crashes.keys(),
            applied_operators=dict(self.applied),
            first_applied=dict(self.first_applied),
            trajectory=list(self.trajectory),
            stop_reason=stop_reason,
        )

    def _write_edges(self, path: str):
        """Covered edges with the instrumentation region that produced them."""
        with open(path, 'w', encoding='utf-8') as f:
            f.write('edge,region\n')
            for edge in self.coverage.covered_edges().tolist():
                f.write(f"{edge},{self.target.region_of_edge(edge)}\n")


def campaign(config: CampaignConfig, **kwargs) -> CampaignReport:
    """Run one campaign; keyword arguments go to ``Campaign``."""
    return Campaign(config, **kwargs).run()
