"""
Seed import: WGSL files become corpus candidates.

Every readable ``.wgsl`` file yields a syntax-tree sample; invalid UTF-8 is
replaced, not refused. Files the reference validator accepts and the raiser
can translate yield an IR sample as well.
"""

import os
from typing import List

from engine.sample import AST, IR, ORIGIN_SEED, Sample
from ir.raising import RaiseError, raise_module
from syntax.parser import ParseFailure, parse
from targets.reference import validate_reference
from util.log_utils import log_debug, log_info, log_warning

NAME = 'Seeds'
SEED_SUFFIX = '.wgsl'


def import_seeds(directory: str, log_queue=None) -> List[Sample]:
    """Parse (and where possible raise) every seed file of `directory`.

    Args:
        directory: Directory with .wgsl files (not searched recursively)
        log_queue: Optional log queue

    Returns:
        Samples in file-name order, AST sample before its IR twin. Empty if
        the directory holds no usable seed.

    Raises:
        OSError: If the directory itself cannot be listed
    """
    samples: List[Sample] = []
    names = sorted(n for n in os.listdir(directory) if n.endswith(SEED_SUFFIX))
    raised = 0
    for name in names:
        path = os.path.join(directory, name)
        try:
            with open(path, 'rb') as f:
                text = f.read().decode('utf-8', errors='replace')
        except OSError as e:
            log_warning(log_queue, NAME, f"skipping unreadable seed {name}: {e}")
            continue
        try:
            tree = parse(text)
        except ParseFailure as e:
            log_warning(log_queue, NAME, f"skipping seed {name}: {e}")
            continue
        samples.append(Sample(AST, tree, operator=ORIGIN_SEED, name=name))

        if not validate_reference(text).accepted:
            continue
        try:
            module = raise_module(tree)
        except RaiseError as e:
            log_debug(log_queue, NAME, f"{name}: no IR form ({e})")
            continue
        samples.append(Sample(IR, module, operator=ORIGIN_SEED, name=name))
        raised += 1

    log_info(log_queue, NAME, f"imported {len(samples)} samples from {len(names)} files ({raised} with IR form)")
    return samples
