import os
import random

import pytest

from engine.corpus import Corpus, CorpusStore
from engine.sample import AST, IR, ORIGIN_SEED, Sample, twin_of
from engine.seeds import import_seeds
from engine.sidecar import SidecarError, decode_sidecar, encode_sidecar
from ir.generator import generate_module
from syntax.nodes import structural_equal
from syntax.parser import parse


def test_ast_sidecar_restores_the_tree(vertex_source):
    tree = parse(vertex_source)
    layer, payload = decode_sidecar(encode_sidecar(AST, tree))
    assert layer == AST
    assert structural_equal(payload.root, tree.root)


def test_ir_sidecar_restores_the_module():
    module = generate_module(random.Random(5))
    layer, payload = decode_sidecar(encode_sidecar(IR, module))
    assert layer == IR
    assert payload == module


@pytest.mark.parametrize('damage', ['magic', 'version', 'truncated', 'trailing'])
def test_damaged_sidecar_is_refused(damage):
    data = bytearray(encode_sidecar(AST, parse("fn f() {}")))
    if damage == 'magic':
        data[0:4] = b'XXXX'
    elif damage == 'version':
        data[5] = 99
    elif damage == 'truncated':
        del data[-3:]
    else:
        data += b'\x00'
    with pytest.raises(SidecarError):
        decode_sidecar(bytes(data))


def test_unknown_layer_is_refused():
    with pytest.raises(SidecarError):
        encode_sidecar('bytes', b'')


def test_sample_layer_is_checked():
    with pytest.raises(ValueError):
        Sample('text', parse("fn f() {}"))


def test_corpus_ids_follow_admission_order():
    corpus = Corpus()
    a = corpus.add(Sample(AST, parse("fn a() {}")))
    b = corpus.add(Sample(AST, parse("fn b() {}")))
    assert (a.id, b.id) == (0, 1)
    assert corpus.get(1) is b
    assert len(corpus.trees()) == 2
    with pytest.raises(ValueError):
        corpus.add(a)


def test_store_saves_and_reloads(tmp_path, vertex_source):
    store = CorpusStore(str(tmp_path))
    corpus = Corpus()
    ast = corpus.add(Sample(AST, parse(vertex_source), novel_edges=frozenset({3, 17}),
                            operator=ORIGIN_SEED, name='vertex color.wgsl'))
    ir = corpus.add(Sample(IR, generate_module(random.Random(2)), parent=0, operator='Literals'))
    ir.flagged = True
    for sample in corpus:
        store.save(sample)

    assert sorted(os.listdir(store.directory)) == [
        '000000.bin', '000000.meta', '000000.wgsl', '000001.bin', '000001.meta', '000001.wgsl']
    loaded = store.load_all()
    assert [s.id for s in loaded] == [0, 1]
    first, second = loaded.get(0), loaded.get(1)
    assert first.source == ast.source
    assert first.novel_edges == {3, 17}
    assert first.name == 'vertex_color.wgsl'
    assert second.layer == IR
    assert second.parent == 0
    assert second.operator == 'Literals'
    assert second.flagged
    assert second.source == ir.source
    assert loaded.next_id == 2


def test_store_skips_corrupt_records(tmp_path):
    store = CorpusStore(str(tmp_path))
    for text in ("fn a() {}", "fn b() {}"):
        sample = Sample(AST, parse(text))
        sample.id = 0 if text.startswith("fn a") else 1
        store.save(sample)
    with open(os.path.join(store.directory, '000000.bin'), 'wb') as f:
        f.write(b'garbage')
    loaded = store.load_all()
    assert [s.id for s in loaded] == [1]


def test_missing_corpus_directory_is_empty(tmp_path):
    assert len(CorpusStore(str(tmp_path / 'nothing')).load_all()) == 0


def test_twin_of_ir_sample():
    ir = Sample(IR, generate_module(random.Random(4)))
    ir.id = 7
    twin = twin_of(ir)
    assert twin.layer == AST
    assert twin.parent == 7
    assert structural_equal(twin.payload.root, parse(ir.source).root)
    assert twin_of(twin) is None


def test_import_seeds(seeds_dir):
    samples = import_seeds(seeds_dir)
    names = sorted(os.listdir(seeds_dir))
    ast_names = [s.name for s in samples if s.layer == AST]
    assert ast_names == [n for n in names if n.endswith('.wgsl')]
    assert 'vertex_color.wgsl' in {s.name for s in samples if s.layer == IR}
    assert all(s.operator == ORIGIN_SEED for s in samples)


def test_import_skips_unparseable_files(tmp_path):
    (tmp_path / 'ok.wgsl').write_text("fn f() {}")
    (tmp_path / 'empty.wgsl').write_text("")
    (tmp_path / 'notes.txt').write_text("fn g() {}")
    samples = import_seeds(str(tmp_path))
    assert [s.name for s in samples if s.layer == AST] == ['ok.wgsl']
    assert {s.name for s in samples} == {'ok.wgsl'}


def test_import_keeps_byte_damaged_seeds(tmp_path):
    (tmp_path / 'damaged.wgsl').write_bytes(b'fn f() { let a = 1\xff\xfe; }')
    samples = import_seeds(str(tmp_path))
    assert [(s.name, s.layer) for s in samples] == [('damaged.wgsl', AST)]
    assert samples[0].payload.error_count() > 0
    assert samples[0].source.startswith('fn f')
