import os
from dataclasses import replace

import pytest

from config.campaign_config import AblationMode, CampaignConfig, CampaignConfigManager, ConfigError


def test_parse_delayed_modes():
    mode = AblationMode.parse('ast-delayed:5000')
    assert (mode.kind, mode.switch_at, mode.switch_unit) == ('ast-delayed', 5000.0, 'execs')
    assert str(mode) == 'ast-delayed:5000'

    mode = AblationMode.parse('IR-Delayed:300s')
    assert (mode.kind, mode.switch_at, mode.switch_unit) == ('ir-delayed', 300.0, 's')
    assert str(mode) == 'ir-delayed:300s'


@pytest.mark.parametrize('text', ['bogus', 'ast-delayed', 'full:3', 'ir-delayed:-1', 'ir-delayed:soon'])
def test_bad_ablation_modes(text):
    with pytest.raises(ConfigError):
        AblationMode.parse(text)


def test_enabled_layers():
    assert AblationMode.parse('full').enabled_layers(0, 0) == {'ast', 'ir'}
    assert AblationMode.parse('ir-disabled').enabled_layers(10 ** 6, 10 ** 6) == {'ast'}
    assert AblationMode.parse('ast-disabled').enabled_layers(0, 0) == {'ir'}

    delayed = AblationMode.parse('ir-delayed:100')
    assert delayed.enabled_layers(99, 1000) == {'ast'}
    assert delayed.enabled_layers(100, 0) == {'ast', 'ir'}

    timed = AblationMode.parse('ast-delayed:30s')
    assert timed.enabled_layers(10 ** 6, 29.9) == {'ir'}
    assert timed.enabled_layers(0, 30) == {'ast', 'ir'}


def test_budget_is_required():
    with pytest.raises(ConfigError, match='budget'):
        CampaignConfig().validate()
    assert CampaignConfig(max_time=1).validate().max_time == 1


def test_external_target_checks():
    with pytest.raises(ConfigError):
        CampaignConfig(target='external', max_execs=10).validate()
    with pytest.raises(ConfigError, match='placeholder'):
        CampaignConfig(target='external', target_cmd=['tint', 'shader.wgsl'], max_execs=10).validate()
    stdin = CampaignConfig(target='external', target_cmd=['tint'], target_delivery='stdin', max_execs=10)
    assert stdin.validate() is stdin


@pytest.mark.parametrize('changes', [
    {'target': 'gpu'},
    {'stability_repeats': 1},
    {'instances': 0},
    {'timeout': 0},
    {'max_functions': 0},
    {'output_dir': ''},
    {'seeds_dir': '/nonexistent/seeds'},
    {'ablation': AblationMode.parse('ir-delayed:100')},
])
def test_invalid_fields(changes):
    cfg = replace(CampaignConfig(max_execs=100), **changes)
    with pytest.raises(ConfigError):
        cfg.validate()


def test_switch_point_below_budget():
    cfg = CampaignConfig(max_execs=1000, ablation=AblationMode.parse('ir-delayed:100'))
    assert cfg.validate() is cfg
    timed = CampaignConfig(max_execs=10, ablation=AblationMode.parse('ir-delayed:100s'))
    assert timed.validate() is timed


def test_for_instance():
    cfg = CampaignConfig(seed=7, output_dir='runs', instances=4, max_execs=10)
    second = cfg.for_instance(2)
    assert second.seed == 9
    assert second.instances == 1
    assert second.output_dir == os.path.join('runs', 'instance_2')
    assert cfg.seed == 7


def test_save_and_load(tmp_path):
    cfg = CampaignConfig(
        output_dir=str(tmp_path / 'out'),
        target='external',
        target_cmd=['sh', '-c', 'tint {input} -o out.hlsl && dxc out.hlsl'],
        target_env=['ASAN_OPTIONS'],
        max_time=60.5,
        ablation=AblationMode.parse('ir-delayed:300s'),
        deterministic=True,
        seed=42,
    )
    manager = CampaignConfigManager.for_output(cfg.output_dir)
    assert manager.save(cfg)
    assert manager.exists()
    assert not os.path.exists(manager.config_path + '.tmp')
    assert manager.load() == cfg


def test_missing_file_gives_defaults(tmp_path):
    manager = CampaignConfigManager(str(tmp_path / 'none.cfg'))
    assert manager.load_values() == {}
    assert manager.load() == CampaignConfig()


def test_bad_values_in_file(tmp_path):
    path = tmp_path / 'bad.cfg'
    path.write_text("[campaign]\nmax_execs = lots\n")
    with pytest.raises(ConfigError, match='max_execs'):
        CampaignConfigManager(str(path)).load()

    path.write_text("not an ini file\n")
    with pytest.raises(ConfigError):
        CampaignConfigManager(str(path)).load()


def test_header_is_one_line():
    header = CampaignConfig(max_execs=5, target_cmd=['a b', '{input}']).header()
    assert header.startswith('# config ')
    assert '\n' not in header
    assert 'max_execs=5' in header
