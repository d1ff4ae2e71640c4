import os

import pytest

from cli.reports import read_edges
from config.campaign_config import AblationMode, CampaignConfig, CampaignConfigManager, ConfigError
from config.config import CALIBRATION_RATIO, DEFAULT_GENERATOR_COUNT, MINIMIZE_MAX_EXECS, STABILITY_REPEATS
from engine.campaign import Campaign, campaign
from engine.corpus import CorpusStore
from engine.sample import AST, IR, ORIGIN_TWIN
from ir.mutations import IR_OPERATOR_NAMES
from syntax.mutations import AST_OPERATOR_NAMES


def _config(tmp_path, name='out', **changes):
    values = dict(
        output_dir=str(tmp_path / name),
        max_execs=60,
        generator_count=4,
        stability_repeats=2,
        minimize_max_execs=20,
        max_statements=6,
        deterministic=True,
        seed=11,
    )
    values.update(changes)
    return CampaignConfig(**values)


def _operators(name):
    return name.split('+')


def test_small_campaign(tmp_path, seeds_dir):
    cfg = _config(tmp_path, seeds_dir=seeds_dir)
    report = Campaign(cfg, record_trajectory=True).run()

    assert report.execs == 60
    assert report.stop_reason == 'max_execs'
    assert report.counts.total == report.execs
    assert report.edges > 0
    assert report.corpus_size > 0
    assert report.calibration_execs >= 0
    assert len(report.trajectory) == report.execs
    assert all(a <= b for a, b in zip(report.trajectory, report.trajectory[1:]))
    assert report.trajectory[-1] == report.edges

    for name in ('stats.txt', 'report.txt', 'edges.csv', 'campaign.cfg'):
        assert os.path.exists(os.path.join(cfg.output_dir, name))
    with open(os.path.join(cfg.output_dir, 'edges.csv')) as f:
        assert len(f.read().splitlines()) == report.edges + 1
    assert CampaignConfigManager.for_output(cfg.output_dir).load() == cfg


def test_corpus_on_disk_matches_memory(tmp_path, seeds_dir):
    cfg = _config(tmp_path, seeds_dir=seeds_dir, max_execs=30)
    runner = Campaign(cfg)
    runner.run()
    loaded = CorpusStore(cfg.output_dir).load_all()
    assert [s.id for s in loaded] == [s.id for s in runner.corpus]
    assert [s.source for s in loaded] == [s.source for s in runner.corpus]
    # every admitted sample contributed edges or is marked as unminimized
    assert all(s.novel_edges or s.flagged for s in runner.corpus)


def test_same_seed_same_trajectory(tmp_path):
    first = Campaign(_config(tmp_path, 'a'), record_trajectory=True).run()
    second = Campaign(_config(tmp_path, 'b'), record_trajectory=True).run()
    assert first.trajectory == second.trajectory
    assert first.applied_operators == second.applied_operators


def test_ir_disabled_applies_only_syntax_operators(tmp_path):
    report = campaign(_config(tmp_path, ablation=AblationMode.parse('ir-disabled')))
    assert report.applied_operators
    assert set(report.applied_operators) <= set(AST_OPERATOR_NAMES)


def test_ast_disabled_applies_only_ir_operators(tmp_path):
    report = campaign(_config(tmp_path, ablation=AblationMode.parse('ast-disabled')))
    assert report.applied_operators
    assert set(report.applied_operators) <= set(IR_OPERATOR_NAMES)


def test_delayed_layer_starts_at_the_switch_point(tmp_path):
    report = campaign(_config(tmp_path, max_execs=80, ablation=AblationMode.parse('ir-delayed:40')))
    ir_first = [report.first_applied[op] for op in IR_OPERATOR_NAMES if op in report.first_applied]
    assert all(index > 40 for index in ir_first)


def test_generator_only_campaign_fills_both_layers(tmp_path):
    runner = Campaign(_config(tmp_path, max_execs=8, generator_count=8))
    runner.run()
    layers = {s.layer for s in runner.corpus}
    assert IR in layers
    # admitted generator samples bring their syntax-tree twin along
    assert AST in layers


def test_invalid_config_runs_nothing(tmp_path):
    cfg = CampaignConfig(output_dir=str(tmp_path / 'never'))
    with pytest.raises(ConfigError):
        Campaign(cfg).run()
    assert not os.path.exists(cfg.output_dir)


def test_resume_continues_numbering(tmp_path):
    cfg = _config(tmp_path, max_execs=20)
    first = Campaign(cfg)
    first.run()
    before = len(first.corpus)

    resumed = Campaign(_config(tmp_path, max_execs=20, resume=True))
    resumed.run()
    assert len(resumed.corpus) >= before
    ids = [s.id for s in resumed.corpus]
    assert ids == sorted(ids)
    assert len(set(ids)) == len(ids)


def test_minimization_stays_within_its_allowance(tmp_path, seeds_dir):
    cfg = _config(tmp_path, seeds_dir=seeds_dir, max_execs=150, generator_count=20,
                  stability_repeats=STABILITY_REPEATS, minimize_max_execs=MINIMIZE_MAX_EXECS)
    runner = Campaign(cfg)
    report = runner.run()
    assert runner.minimize_runs <= CALIBRATION_RATIO * report.execs
    assert report.calibration_execs <= runner.minimize_runs + STABILITY_REPEATS * report.execs
    assert report.applied_operators


def test_generated_samples_and_twins_are_not_minimized(tmp_path):
    runner = Campaign(_config(tmp_path, max_execs=8, generator_count=8))
    runner.run()
    assert runner.minimize_runs == 0
    twins = [s for s in runner.corpus if s.operator == ORIGIN_TWIN]
    assert twins
    for twin in twins:
        assert twin.novel_edges == runner.corpus.get(twin.parent).novel_edges


@pytest.mark.slow
def test_mutations_start_within_a_minute(tmp_path):
    cfg = CampaignConfig(output_dir=str(tmp_path / 'out'), max_time=60, seed=5)
    report = campaign(cfg)
    assert report.execs > DEFAULT_GENERATOR_COUNT
    assert sum(report.applied_operators.values()) > 0
    assert report.calibration_execs < 10 * report.execs


@pytest.mark.slow
def test_full_stack_correctness_rate_band(tmp_path):
    cfg = CampaignConfig(output_dir=str(tmp_path / 'out'), max_execs=3000, seed=7)
    report = campaign(cfg)
    assert 0.05 <= report.correctness_rate <= 0.40


@pytest.mark.slow
def test_ablation_modes_reach_different_regions(tmp_path):
    dirs = {}
    for mode in ('ir-disabled', 'ast-disabled'):
        cfg = CampaignConfig(output_dir=str(tmp_path / mode), max_execs=2000, seed=7,
                             ablation=AblationMode.parse(mode))
        campaign(cfg)
        dirs[mode] = cfg.output_dir
    recovery = {mode: read_edges(path, 'parser.recovery') for mode, path in dirs.items()}
    checker = {mode: read_edges(path, 'checker') for mode, path in dirs.items()}
    assert recovery['ir-disabled'] - recovery['ast-disabled']
    assert checker['ast-disabled'] - checker['ir-disabled']
