"""Shared fixtures: bundled seed shaders, seeded RNGs and stub external targets."""

import os
import random
import sys
import textwrap

import pytest

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
SEEDS_DIR = os.path.join(REPO_ROOT, 'seeds')

# vertex shader with a struct result and a helper function
VERTEX_SHADER = open(os.path.join(SEEDS_DIR, 'vertex_color.wgsl'), encoding='utf-8').read()

STUB_HEADER = textwrap.dedent('''\
    import mmap
    import os
    import sys


    def touch(edges):
        path = os.environ['__AFL_SHM_ID']
        with open(path, 'r+b') as f:
            mm = mmap.mmap(f.fileno(), 65536)
            for edge in edges:
                mm[edge] = min(255, mm[edge] + 1)
            mm.flush()
            mm.close()


    source = open(sys.argv[1], encoding='utf-8', errors='replace').read() if len(sys.argv) > 1 else sys.stdin.read()
    ''')


@pytest.fixture
def vertex_source():
    return VERTEX_SHADER


@pytest.fixture
def seeds_dir():
    return SEEDS_DIR


@pytest.fixture
def rng():
    return random.Random(1234)


@pytest.fixture
def stub_target(tmp_path):
    """Write a stub target script; returns the argv to run it on `{input}`.

    `body` runs after the header, with `touch(edges)` and `source` in scope.
    """
    def make(body: str, name: str = 'stub.py', stdin: bool = False):
        path = tmp_path / name
        path.write_text(STUB_HEADER + textwrap.dedent(body), encoding='utf-8')
        argv = [sys.executable, str(path)]
        return argv if stdin else argv + ['{input}']
    return make
