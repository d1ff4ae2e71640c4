import os

from cli.main import build_parser, config_from_args, main
from config.config import EXIT_CONFIG_ERROR, EXIT_OK, EXIT_TARGET_ERROR
from engine.corpus import CorpusStore
from syntax.parser import parse
from syntax.unparse import unparse
from targets.reference import validate_reference


def test_gen_writes_accepted_shaders(tmp_path):
    out = tmp_path / 'gen'
    assert main(['gen', '-n', '5', '--seed', '3', '--out', str(out)]) == EXIT_OK
    files = sorted(os.listdir(out))
    assert files == [f"gen_{i:06d}.wgsl" for i in range(5)]
    texts = [(out / name).read_text() for name in files]
    assert sum(validate_reference(t).accepted for t in texts) >= 3


def test_gen_is_reproducible(tmp_path, capsys):
    main(['gen', '-n', '2', '--seed', '9'])
    first = capsys.readouterr().out
    main(['gen', '-n', '2', '--seed', '9'])
    assert capsys.readouterr().out == first
    assert first.startswith('// shader 0')


def test_mutate_ast_operator(tmp_path, seeds_dir):
    out = tmp_path / 'mutated.wgsl'
    src = os.path.join(seeds_dir, 'vertex_color.wgsl')
    assert main(['mutate', src, '--operator', 'Swap', '--seed', '1', '--out', str(out)]) == EXIT_OK
    with open(src, encoding='utf-8') as f:
        original = unparse(parse(f.read()))
    assert out.read_text() != original


def test_mutate_ir_operator(tmp_path, seeds_dir):
    out = tmp_path / 'mutated.wgsl'
    src = os.path.join(seeds_dir, 'vertex_color.wgsl')
    assert main(['mutate', src, '--operator', 'Literals', '--out', str(out)]) == EXIT_OK
    assert validate_reference(out.read_text()).accepted


def test_mutate_ir_operator_without_ir_form(tmp_path):
    src = tmp_path / 'uniform.wgsl'
    src.write_text("@group(0) @binding(0) var<uniform> u: vec4<f32>;\n"
                   "@fragment fn main() -> @location(0) vec4<f32> { return u; }\n")
    assert main(['mutate', str(src), '--operator', 'Literals']) == EXIT_CONFIG_ERROR


def test_min_keeps_the_rejection_reason(tmp_path):
    src = tmp_path / 'bad.wgsl'
    src.write_text("fn helper() -> i32 { return 1; }\n"
                   "fn f() -> i32 { let a = 1; return true; }\n")
    out = tmp_path / 'min.wgsl'
    assert main(['min', str(src), '--out', str(out)]) == EXIT_OK
    reduced = out.read_text()
    assert len(reduced) < len(src.read_text())
    assert validate_reference(reduced).reason == 'type-error'


def test_report_commands(tmp_path, capsys):
    run = tmp_path / 'run'
    run.mkdir()
    (run / 'stats.txt').write_text(
        "# config seed=0\n"
        "timestamp=1 elapsed=0 execs=0 edges=0 corpus_size=0 accepted=0 rejected=0 crashes=0 timeouts=0\n"
        "timestamp=2 elapsed=5 execs=100 edges=40 corpus_size=3 accepted=15 rejected=85 crashes=0 timeouts=0\n")
    (run / 'edges.csv').write_text("edge,region\n1,lexer\n2,checker\n")
    other = tmp_path / 'other.csv'
    other.write_text("edge,region\n2,checker\n")
    out = tmp_path / 'reports'

    assert main(['report', 'cov', str(run), '--out-dir', str(out)]) == EXIT_OK
    assert (out / 'coverage.csv').exists()
    assert main(['report', 'rate', str(run), '--out-dir', str(out)]) == EXIT_OK
    assert '15.00' in capsys.readouterr().out
    assert main(['report', 'excl', f"a={run}", f"b={other}", '--out-dir', str(out)]) == EXIT_OK
    assert (out / 'exclusive.csv').read_text().splitlines()[1:] == ['a,2,1', 'b,1,0']


def test_report_on_corrupt_stats(tmp_path):
    stats = tmp_path / 'stats.txt'
    stats.write_text("timestamp=1 elapsed=0 execs=0\n")
    assert main(['report', 'cov', str(stats), '--out-dir', str(tmp_path)]) == EXIT_CONFIG_ERROR
    assert main(['report', 'excl', 'only=x', '--out-dir', str(tmp_path)]) == EXIT_CONFIG_ERROR


def test_fuzz_without_budget_is_a_config_error(tmp_path):
    assert main(['fuzz', '--output-dir', str(tmp_path / 'out')]) == EXIT_CONFIG_ERROR


def test_fuzz_with_missing_target_binary(tmp_path):
    code = main(['fuzz', '--output-dir', str(tmp_path / 'out'), '--max-execs', '5',
                 '--target-cmd', '/nonexistent/tint {input}'])
    assert code == EXIT_TARGET_ERROR


def test_fuzz_small_campaign(tmp_path, seeds_dir):
    out = tmp_path / 'out'
    code = main(['fuzz', '--output-dir', str(out), '--max-execs', '20', '--seeds-dir', seeds_dir,
                 '--generator-count', '2', '--stability-repeats', '2', '--minimize-max-execs', '10'])
    assert code == EXIT_OK
    assert (out / 'report.txt').exists()
    assert len(CorpusStore(str(out)).ids()) > 0


def test_config_file_with_flag_override(tmp_path):
    cfg_path = tmp_path / 'c.cfg'
    cfg_path.write_text("[campaign]\nmax_execs = 50\nseed = 4\nablation = ir-delayed:10\n")
    args = build_parser().parse_args(['fuzz', '--config', str(cfg_path), '--seed', '8'])
    cfg = config_from_args(args)
    assert (cfg.max_execs, cfg.seed, str(cfg.ablation)) == (50, 8, 'ir-delayed:10')
    assert cfg.target == 'reference'


def test_target_cmd_selects_the_external_target():
    args = build_parser().parse_args(['fuzz', '--max-execs', '1', '--target-cmd', 'tint {input} --hlsl',
                                      '--target-env', 'ASAN_OPTIONS, UBSAN_OPTIONS'])
    cfg = config_from_args(args)
    assert cfg.target == 'external'
    assert cfg.target_cmd == ['tint', '{input}', '--hlsl']
    assert cfg.target_env == ['ASAN_OPTIONS', 'UBSAN_OPTIONS']


def test_import_command(tmp_path, seeds_dir):
    out = tmp_path / 'out'
    assert main(['import', seeds_dir, '--output-dir', str(out)]) == EXIT_OK
    first = CorpusStore(str(out)).ids()
    assert len(first) >= 3
    assert main(['import', seeds_dir, '--output-dir', str(out)]) == EXIT_OK
    assert CorpusStore(str(out)).ids()[len(first)] == first[-1] + 1
    assert main(['import', str(tmp_path / 'nothing'), '--output-dir', str(out)]) == EXIT_CONFIG_ERROR
