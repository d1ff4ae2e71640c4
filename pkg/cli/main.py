"""
shaderfuzz command line.

    shaderfuzz fuzz   --max-execs 10000 [--seeds-dir seeds] [--instances 4] ...
    shaderfuzz gen    -n 10 --out gen/
    shaderfuzz mutate shader.wgsl --operator Swap
    shaderfuzz min    crash.wgsl --keep status --target external --target-cmd "..."
    shaderfuzz report cov|rate|excl ...
    shaderfuzz import seeds/ --output-dir out

Exit codes: 0 clean, 2 configuration or input error, 3 target error.
"""

import argparse
import os
import random
import shlex
import sys
from dataclasses import replace
from typing import Dict, List, Optional

from config.campaign_config import (
    ABLATION_KINDS, DELIVERY_MODES, TARGET_KINDS,
    AblationMode, CampaignConfig, CampaignConfigManager, ConfigError,
)
from config.config import EXIT_CONFIG_ERROR, EXIT_OK, EXIT_TARGET_ERROR, LOG_FILE_NAME
from cli import reports
from engine.campaign import Campaign
from engine.corpus import Corpus, CorpusStore
from engine.coverage import CoverageMap
from engine.executor import EngineError, Executor
from engine.sample import AST, IR, Sample, render
from engine.seeds import import_seeds
from ir.generator import GenerationLimits, generate_module
from ir.lift import lift
from ir.minimize import minimize_ir
from ir.mutations import IR_OPERATOR_NAMES, mutate_ir
from ir.raising import RaiseError, raise_module
from syntax.minimize import minimize_ast
from syntax.mutations import AST_OPERATOR_NAMES, mutate_ast
from syntax.parser import ParseFailure, parse
from syntax.unparse import unparse
from targets.base import Target, TargetError, make_target
from util.log_utils import configure_console_logging

NAME = 'shaderfuzz'


# ============================================================================
# Argument parsing
# ============================================================================

def _add_target_flags(p: argparse.ArgumentParser):
    p.add_argument('--target', choices=TARGET_KINDS, help="system under test (default: reference)")
    p.add_argument('--target-cmd', help="external command line; '{input}' is replaced by the shader path")
    p.add_argument('--target-delivery', choices=DELIVERY_MODES, help="how the shader reaches the command")
    p.add_argument('--target-env', help="comma-separated environment variables passed to the target")
    p.add_argument('--shm-env-var', help="variable carrying the coverage map path")
    p.add_argument('--timeout', type=float, help="seconds per execution")


def _add_limit_flags(p: argparse.ArgumentParser):
    p.add_argument('--max-types', type=int)
    p.add_argument('--max-functions', type=int)
    p.add_argument('--max-statements', type=int)
    p.add_argument('--max-globals', type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=NAME, description="Coverage-guided WGSL fuzzer")
    parser.add_argument('-v', '--verbose', action='store_true', help="log debug messages")
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('fuzz', help="run a campaign")
    p.add_argument('--config', help="campaign .cfg file; flags override its values")
    p.add_argument('--output-dir')
    _add_target_flags(p)
    p.add_argument('--seeds-dir')
    p.add_argument('--generator-count', type=int)
    p.add_argument('--seed', type=int, help="RNG seed")
    p.add_argument('--max-execs', type=int)
    p.add_argument('--max-time', type=float, help="seconds")
    p.add_argument('--ablation', help=f"one of {', '.join(ABLATION_KINDS)}; delayed kinds take ':N' or ':Ns'")
    p.add_argument('--deterministic', action='store_true', default=None,
                   help="schedule by sample size instead of wall time")
    p.add_argument('--instances', type=int, help="independent campaign processes")
    p.add_argument('--resume', action='store_true', default=None, help="continue from <output>/corpus")
    p.add_argument('--max-ast-nodes', type=int)
    p.add_argument('--max-ast-depth', type=int)
    p.add_argument('--stability-repeats', type=int)
    p.add_argument('--minimize-max-execs', type=int)
    _add_limit_flags(p)

    p = sub.add_parser('gen', help="emit generated shaders")
    p.add_argument('-n', '--count', type=int, default=1)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--out', help="directory for gen_<i>.wgsl files (default: stdout)")
    _add_limit_flags(p)

    p = sub.add_parser('mutate', help="apply one named mutation to a shader")
    p.add_argument('input')
    p.add_argument('--operator', required=True, choices=AST_OPERATOR_NAMES + IR_OPERATOR_NAMES)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--donor', action='append', default=[], help="donor shader for Splice (repeatable)")
    p.add_argument('--out', help="output file (default: stdout)")

    p = sub.add_parser('min', help="minimize a shader while a property holds")
    p.add_argument('input')
    p.add_argument('--layer', choices=(AST, IR), default=AST)
    p.add_argument('--keep', choices=('status', 'edges'), default='status',
                   help="keep the outcome (status and reason) or the full edge set")
    p.add_argument('--max-checks', type=int)
    p.add_argument('--out', help="output file (default: stdout)")
    _add_target_flags(p)

    p = sub.add_parser('report', help="reports over stats files and edge lists")
    rsub = p.add_subparsers(dest='report', required=True)
    r = rsub.add_parser('cov', help="covered edges over time")
    r.add_argument('stats', nargs='+', help="stats files or campaign directories")
    r.add_argument('--out-dir', default='.', help=f"where {reports.COVERAGE_CSV} is written")
    r = rsub.add_parser('rate', help="semantic correctness rate")
    r.add_argument('stats', nargs='+', help="stats files or campaign directories")
    r.add_argument('--out-dir', default='.', help=f"where {reports.CORRECTNESS_CSV} is written")
    r = rsub.add_parser('excl', help="exclusively covered edges")
    r.add_argument('configs', nargs='+', help="NAME=dir_or_csv[,dir_or_csv...] per configuration")
    r.add_argument('--region', help="only count edges of this instrumentation region")
    r.add_argument('--out-dir', default='.', help=f"where {reports.EXCLUSIVE_CSV} is written")

    p = sub.add_parser('import', help="import a seed directory into a corpus")
    p.add_argument('seeds_dir')
    p.add_argument('--output-dir', default='out')
    return parser


# ============================================================================
# Config assembly
# ============================================================================

_FLAG_FIELDS = (
    'output_dir', 'target', 'target_delivery', 'shm_env_var', 'timeout', 'seeds_dir',
    'generator_count', 'seed', 'max_execs', 'max_time', 'deterministic', 'instances', 'resume',
    'max_ast_nodes', 'max_ast_depth', 'stability_repeats', 'minimize_max_execs',
    'max_types', 'max_functions', 'max_statements', 'max_globals',
)


def config_from_args(args) -> CampaignConfig:
    """CampaignConfig from an optional .cfg file overridden by flags.

    Raises:
        ConfigError: If the file or a flag value is invalid
    """
    values: Dict[str, str] = {}
    if getattr(args, 'config', None):
        manager = CampaignConfigManager(args.config)
        if not manager.exists():
            raise ConfigError(f"config file not found: {args.config}")
        values = manager.load_values()
    cfg = CampaignConfig.from_dict(values)
    overrides = {}
    for name in _FLAG_FIELDS:
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if getattr(args, 'target_cmd', None):
        overrides['target_cmd'] = shlex.split(args.target_cmd)
        overrides.setdefault('target', 'external')
    if getattr(args, 'target_env', None):
        overrides['target_env'] = [v.strip() for v in args.target_env.split(',') if v.strip()]
    if getattr(args, 'ablation', None):
        overrides['ablation'] = AblationMode.parse(args.ablation)
    return replace(cfg, **overrides)


def _limits(args) -> GenerationLimits:
    limits = GenerationLimits()
    for name in ('max_types', 'max_functions', 'max_statements', 'max_globals'):
        value = getattr(args, name, None)
        if value is not None:
            setattr(limits, name, value)
    return limits


def _read(path: str) -> str:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return f.read()
    except (OSError, UnicodeDecodeError) as e:
        raise ConfigError(f"cannot read {path}: {e}")


def _emit(text: str, out: Optional[str]):
    if out:
        with open(out, 'w', encoding='utf-8') as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _tool_target(args) -> Target:
    """Target for the single-shot commands (no budget needed)."""
    cfg = config_from_args(args)
    if cfg.target == 'external':
        replace(cfg, max_execs=1).validate()
    return make_target(cfg)


# ============================================================================
# Commands
# ============================================================================

def cmd_fuzz(args) -> int:
    cfg = config_from_args(args).validate()
    os.makedirs(cfg.output_dir, exist_ok=True)
    if cfg.instances > 1:
        from process_man import ProcessHandler
        handler = ProcessHandler(cfg)
        handler.start_workers()
        try:
            handler.wait()
        except KeyboardInterrupt:
            print("[Main] KeyboardInterrupt, shutting down...")
        finally:
            handler.stop_workers()
        for worker, message in sorted(handler.errors.items()):
            print(f"[{worker}] {message}")
        return EXIT_TARGET_ERROR if handler.errors else EXIT_OK

    configure_console_logging(os.path.join(cfg.output_dir, LOG_FILE_NAME), args.verbose)
    Campaign(cfg).run()
    return EXIT_OK


def cmd_gen(args) -> int:
    if args.count < 0:
        raise ConfigError("count must not be negative")
    rng = random.Random(args.seed)
    limits = _limits(args)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
    for i in range(args.count):
        text = lift(generate_module(rng, limits))
        if args.out:
            with open(os.path.join(args.out, f"gen_{i:06d}.wgsl"), 'w', encoding='utf-8') as f:
                f.write(text)
        else:
            sys.stdout.write(f"// shader {i}\n{text}\n")
    return EXIT_OK


def _raise_or_fail(tree, path: str):
    try:
        return raise_module(tree)
    except RaiseError as e:
        raise ConfigError(f"{path} has no IR form: {e}")


def cmd_mutate(args) -> int:
    rng = random.Random(args.seed)
    try:
        tree = parse(_read(args.input))
    except ParseFailure as e:
        raise ConfigError(f"{args.input}: {e}")
    if args.operator in IR_OPERATOR_NAMES:
        result = mutate_ir(_raise_or_fail(tree, args.input), rng, operator=args.operator, strict=True)
        text = lift(result.tree)
    else:
        donors = []
        for path in args.donor:
            try:
                donors.append(parse(_read(path)))
            except ParseFailure as e:
                raise ConfigError(f"{path}: {e}")
        result = mutate_ast(tree, donors, rng, operator=args.operator, strict=True)
        text = unparse(result.tree)
    if not result.applied:
        print(f"[{NAME}] {args.operator} has no applicable site in {args.input}", file=sys.stderr)
    _emit(text, args.out)
    return EXIT_OK


def cmd_min(args) -> int:
    try:
        tree = parse(_read(args.input))
    except ParseFailure as e:
        raise ConfigError(f"{args.input}: {e}")
    payload = _raise_or_fail(tree, args.input) if args.layer == IR else tree
    with _tool_target(args) as target:
        executor = Executor(target, CoverageMap())
        source = render(args.layer, payload)
        first = target.run(source)
        edges = executor.edge_set(source) if args.keep == 'edges' else frozenset()

        def keep(candidate) -> bool:
            text = render(args.layer, candidate)
            if args.keep == 'edges':
                return executor.reaches(text, edges)
            result = target.run(text)
            return result.status == first.status and result.reason == first.reason

        if args.layer == AST:
            reduced = minimize_ast(payload, keep, args.max_checks)
        else:
            reduced = minimize_ir(payload, keep, args.max_checks)
    print(f"[{NAME}] {first.status}{' ' + first.reason if first.reason else ''}: "
          f"{len(source)} -> {len(render(args.layer, reduced))} bytes", file=sys.stderr)
    _emit(render(args.layer, reduced), args.out)
    return EXIT_OK


def cmd_report(args) -> int:
    os.makedirs(args.out_dir, exist_ok=True)
    if args.report == 'cov':
        rows = reports.report_coverage([reports.read_stats(reports.resolve_stats_path(p)) for p in args.stats])
        print(reports.coverage_table(rows))
        reports.write_coverage_csv(rows, os.path.join(args.out_dir, reports.COVERAGE_CSV))
    elif args.report == 'rate':
        report = reports.report_correctness([reports.read_stats(reports.resolve_stats_path(p))
                                             for p in args.stats])
        print(reports.correctness_table(report))
        reports.write_correctness_csv(report, os.path.join(args.out_dir, reports.CORRECTNESS_CSV))
    else:
        sets = {}
        for spec in args.configs:
            name, sep, paths = spec.partition('=')
            if not sep or not name or not paths:
                raise reports.ReportError(f"expected NAME=path[,path...], got '{spec}'")
            if name in sets:
                raise reports.ReportError(f"configuration '{name}' given twice")
            sets[name] = reports.merge_edges(paths.split(','), args.region)
        exclusive = reports.report_exclusive(sets)
        print(reports.exclusive_table(sets, exclusive))
        reports.write_exclusive_csv(sets, exclusive, os.path.join(args.out_dir, reports.EXCLUSIVE_CSV))
    return EXIT_OK


def cmd_import(args) -> int:
    """Seeds become corpus records; their edges are measured on the reference target."""
    if not os.path.isdir(args.seeds_dir):
        raise ConfigError(f"seed directory not found: {args.seeds_dir}")
    store = CorpusStore(args.output_dir)
    corpus = Corpus()
    for sample_id in store.ids():
        corpus.next_id = max(corpus.next_id, sample_id + 1)
    samples: List[Sample] = import_seeds(args.seeds_dir)
    with make_target(CampaignConfig()) as target:
        coverage = CoverageMap()
        executor = Executor(target, coverage)
        for sample in samples:
            verdict = executor.run_one(sample.source)
            sample.novel_edges = verdict.new_edges
            sample.flagged = not verdict.new_edges
            if verdict.trace is not None:
                coverage.merge(verdict.trace)
            store.save(corpus.add(sample))
    ast_count = sum(1 for s in samples if s.layer == AST)
    print(f"[{NAME}] imported {ast_count} AST and {len(samples) - ast_count} IR samples into {store.directory}")
    return EXIT_OK


COMMANDS = {
    'fuzz': cmd_fuzz,
    'gen': cmd_gen,
    'mutate': cmd_mutate,
    'min': cmd_min,
    'report': cmd_report,
    'import': cmd_import,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command != 'fuzz':
        configure_console_logging(verbose=args.verbose)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"[{NAME}] configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except reports.ReportError as e:
        print(f"[{NAME}] bad report input: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except (TargetError, EngineError) as e:
        print(f"[{NAME}] target error: {e}", file=sys.stderr)
        return EXIT_TARGET_ERROR
