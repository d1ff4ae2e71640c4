"""
In-memory corpus and its on-disk form.

Every admitted sample is written as three files under ``<output>/corpus``:

    <id>.wgsl   source text (interchange, source of truth for humans)
    <id>.bin    sidecar with the representation (see engine.sidecar)
    <id>.meta   one key=value line with lineage and scheduling data

Ids are assigned in admission order and stay stable across restarts: a
resumed campaign continues numbering after the highest id found on disk.
"""

import os
import re
from typing import Dict, List, Optional

from engine.sample import AST, Sample
from engine.sidecar import SidecarError, decode_sidecar, encode_sidecar
from util.error_utils import format_kv_line, parse_kv_line, safe_float_convert, safe_int_convert
from util.log_utils import log_warning

CORPUS_DIR_NAME = 'corpus'
META_REQUIRED = ('id', 'layer', 'operator')

_UNSAFE = re.compile(r'[^A-Za-z0-9_.\-]')


class Corpus:
    """Admitted samples in admission order."""

    def __init__(self):
        self.samples: List[Sample] = []
        self._by_id: Dict[int, Sample] = {}
        self.next_id = 0

    def __len__(self):
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def add(self, sample: Sample) -> Sample:
        """Insert `sample`, assigning the next id if it has none."""
        if sample.id < 0:
            sample.id = self.next_id
        if sample.id in self._by_id:
            raise ValueError(f"duplicate corpus id {sample.id}")
        self.next_id = max(self.next_id, sample.id + 1)
        self.samples.append(sample)
        self._by_id[sample.id] = sample
        return sample

    def get(self, sample_id: int) -> Optional[Sample]:
        return self._by_id.get(sample_id)

    def of_layer(self, layer: str) -> List[Sample]:
        return [s for s in self.samples if s.layer == layer]

    def trees(self) -> list:
        """Syntax trees of all AST samples (Splice donors)."""
        return [s.payload for s in self.samples if s.layer == AST]

    def covered_edges(self) -> frozenset:
        edges = set()
        for s in self.samples:
            edges |= s.novel_edges
        return frozenset(edges)


def _meta_line(sample: Sample) -> str:
    return format_kv_line({
        'id': sample.id,
        'layer': sample.layer,
        'parent': '-' if sample.parent is None else sample.parent,
        'operator': sample.operator,
        'exec': sample.created_exec,
        'time': f"{sample.created_time:.3f}",
        'energy': f"{sample.energy:.6f}",
        'exec_time': f"{sample.exec_time:.6f}",
        'flagged': int(sample.flagged),
        'name': _UNSAFE.sub('_', sample.name) or '-',
        'edges': ','.join(str(e) for e in sorted(sample.novel_edges)) or '-',
    })


def _apply_meta(sample: Sample, values: Dict[str, str]):
    sample.id = int(values['id'])
    parent = values.get('parent', '-')
    sample.parent = None if parent == '-' else safe_int_convert(parent)
    sample.operator = values['operator']
    sample.created_exec = safe_int_convert(values.get('exec'), 0)
    sample.created_time = safe_float_convert(values.get('time'), 0.0)
    sample.energy = safe_float_convert(values.get('energy'), 1.0, min_val=0.0)
    sample.exec_time = safe_float_convert(values.get('exec_time'), 0.0, min_val=0.0)
    sample.flagged = values.get('flagged', '0') == '1'
    name = values.get('name', '-')
    sample.name = '' if name == '-' else name
    edges = values.get('edges', '-')
    sample.novel_edges = frozenset() if edges == '-' else frozenset(int(e) for e in edges.split(','))


class CorpusStore:
    """Reads and writes corpus records under ``<output_dir>/corpus``."""

    def __init__(self, output_dir: str, log_queue=None):
        self.directory = os.path.join(output_dir, CORPUS_DIR_NAME)
        self.log_queue = log_queue

    def _path(self, sample_id: int, ext: str) -> str:
        return os.path.join(self.directory, f"{sample_id:06d}{ext}")

    def save(self, sample: Sample):
        """Write the three files of one record (text, sidecar, metadata)."""
        os.makedirs(self.directory, exist_ok=True)
        with open(self._path(sample.id, '.wgsl'), 'w', encoding='utf-8', errors='surrogateescape') as f:
            f.write(sample.source)
        with open(self._path(sample.id, '.bin'), 'wb') as f:
            f.write(encode_sidecar(sample.layer, sample.payload))
        with open(self._path(sample.id, '.meta'), 'w', encoding='utf-8') as f:
            f.write(_meta_line(sample) + '\n')

    def sidecar_bytes(self, sample_id: int) -> bytes:
        with open(self._path(sample_id, '.bin'), 'rb') as f:
            return f.read()

    def load(self, sample_id: int) -> Sample:
        """Rebuild one record.

        Raises:
            SidecarError: If the sidecar is corrupt
            ValueError: If the metadata line is malformed
            OSError: If a file is missing
        """
        with open(self._path(sample_id, '.bin'), 'rb') as f:
            layer, payload = decode_sidecar(f.read())
        with open(self._path(sample_id, '.meta'), 'r', encoding='utf-8') as f:
            values = parse_kv_line(f.read().strip(), META_REQUIRED, 'corpus metadata')
        if values['layer'] != layer:
            raise SidecarError(f"record {sample_id}: metadata layer {values['layer']} != sidecar layer {layer}")
        sample = Sample(layer, payload)
        _apply_meta(sample, values)
        text_path = self._path(sample_id, '.wgsl')
        if os.path.exists(text_path):
            with open(text_path, 'r', encoding='utf-8', errors='surrogateescape') as f:
                text = f.read()
            if text != sample.source:
                log_warning(self.log_queue, 'Corpus',
                            f"record {sample_id}: text differs from its sidecar, using the sidecar")
        return sample

    def ids(self) -> List[int]:
        if not os.path.isdir(self.directory):
            return []
        found = []
        for name in os.listdir(self.directory):
            stem, ext = os.path.splitext(name)
            if ext == '.bin' and stem.isdigit():
                found.append(int(stem))
        return sorted(found)

    def load_all(self) -> Corpus:
        """Corpus rebuilt from disk; unreadable records are skipped with a warning."""
        corpus = Corpus()
        for sample_id in self.ids():
            try:
                corpus.add(self.load(sample_id))
            except (SidecarError, ValueError, OSError) as e:
                log_warning(self.log_queue, 'Corpus', f"skipping record {sample_id}: {e}")
        return corpus

