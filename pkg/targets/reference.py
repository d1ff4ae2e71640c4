"""
Bundled reference WGSL validator.

Lexes and parses with the syntax package, then runs the semantic checker.
The validator never raises: every input maps to exactly one
ValidationOutcome, and unexpected exceptions inside the checker are reported
as ``internal-failure``, the equivalent of an internal compiler error.
"""

import sys
import time
import traceback
from dataclasses import dataclass
from typing import Optional, Union

from config.config import MAX_IDENTIFIER_LENGTH, MAX_SOURCE_BYTES, PARSER_RECURSION_LIMIT
from syntax.nodes import NodeKind, iter_nodes
from syntax.parser import ParseFailure, parse
from targets.base import Target, RunResult, ACCEPTED, REJECTED, CRASHED
from targets.checker import CheckError, Checker
from targets.instrumentation import Tracer, OTHER_REGION

INTERNAL_FAILURE = 'internal-failure'

PARSE_ERROR = 'parse-error'
TYPE_ERROR = 'type-error'
LIMIT_ERROR = 'limit-error'


@dataclass(frozen=True)
class ValidationOutcome:
    status: str  # accepted | rejected | internal-failure
    reason: str = ''  # parse-error | type-error | limit-error for rejections
    message: str = ''
    frame: str = ''  # innermost frame of an internal failure, ExcType@func:lineno

    @property
    def accepted(self) -> bool:
        return self.status == ACCEPTED

    @property
    def internal_failure(self) -> bool:
        return self.status == INTERNAL_FAILURE

    def __str__(self):
        if self.status == REJECTED:
            return f"rejected({self.reason}): {self.message}"
        if self.status == INTERNAL_FAILURE:
            return f"internal-failure: {self.message}"
        return self.status


def _rejected(reason: str, message: str) -> ValidationOutcome:
    return ValidationOutcome(REJECTED, reason, message)


def _internal_failure(stage: str, exc: Exception) -> ValidationOutcome:
    frames = traceback.extract_tb(exc.__traceback__)
    frame = f"{frames[-1].name}:{frames[-1].lineno}" if frames else stage
    return ValidationOutcome(INTERNAL_FAILURE, message=f"{stage}: {type(exc).__name__}: {exc}",
                             frame=f"{type(exc).__name__}@{frame}")


def validate_reference(source: Union[str, bytes], tracer=None) -> ValidationOutcome:
    """Validate one shader.

    Args:
        source: WGSL text; bytes are decoded as UTF-8 with replacement
        tracer: Optional coverage tracer receiving every branch site

    Returns:
        ValidationOutcome; deterministic for identical input
    """
    hit = tracer.hit if tracer is not None else None
    size = len(source) if isinstance(source, bytes) else len(source.encode('utf-8', errors='replace'))
    try:
        tree = parse(source, tracer)
    except ParseFailure as e:
        if hit:
            hit('parser.failure')
        return _rejected(LIMIT_ERROR if size > MAX_SOURCE_BYTES else PARSE_ERROR, str(e))
    except RecursionError:
        return _rejected(LIMIT_ERROR, "input nests too deeply")
    except Exception as e:
        return _internal_failure('parser', e)

    if tree.has_limit_diagnostic():
        message = next(d.message for d in tree.diagnostics if d.code == 'limit')
        return _rejected(LIMIT_ERROR, message)
    if tree.error_count():
        first = tree.diagnostics[0].message if tree.diagnostics else "unparseable input"
        return _rejected(PARSE_ERROR, first)
    long_name = _overlong_identifier(tree.root)
    if long_name is not None:
        return _rejected(LIMIT_ERROR, f"identifier of {len(long_name)} characters exceeds {MAX_IDENTIFIER_LENGTH}")

    old_limit = sys.getrecursionlimit()
    if old_limit < PARSER_RECURSION_LIMIT:
        sys.setrecursionlimit(PARSER_RECURSION_LIMIT)
    try:
        Checker(tree.root, tracer).check()
    except CheckError as e:
        return _rejected(TYPE_ERROR, str(e))
    except RecursionError:
        return _rejected(LIMIT_ERROR, "program nests too deeply")
    except Exception as e:
        if hit:
            hit('checker.internal_failure')
        return _internal_failure('checker', e)
    finally:
        if old_limit < PARSER_RECURSION_LIMIT:
            sys.setrecursionlimit(old_limit)
    if hit:
        hit('checker.accepted')
    return ValidationOutcome(ACCEPTED)


def _overlong_identifier(root) -> Optional[str]:
    for node in iter_nodes(root):
        if node.kind == NodeKind.IDENTIFIER and len(node.text) > MAX_IDENTIFIER_LENGTH:
            return node.text
    return None


class ReferenceTarget(Target):
    """In-process target wrapping ``validate_reference``.

    Internal failures of the validator count as crashes. Runs are never
    timed out, so outcomes stay deterministic.
    """

    name = 'reference'

    def __init__(self):
        self.tracer = Tracer()
        self.trace_bits = self.tracer.trace_bits

    def run(self, source: str) -> RunResult:
        self.tracer.begin()
        start = time.perf_counter()
        outcome = validate_reference(source, self.tracer)
        elapsed = time.perf_counter() - start
        if outcome.internal_failure:
            return RunResult(CRASHED, INTERNAL_FAILURE, outcome.message, elapsed=elapsed,
                             top_frame=outcome.frame)
        if outcome.accepted:
            return RunResult(ACCEPTED, elapsed=elapsed)
        return RunResult(REJECTED, outcome.reason, outcome.message, elapsed=elapsed)

    def region_of_edge(self, edge: int) -> str:
        return self.tracer.edge_regions.get(edge, OTHER_REGION)
