"""
Common surface of the systems under test.

A Target owns a 64 KiB coverage map. ``run`` clears it, executes one shader
and returns a RunResult; the map then holds exactly that execution's edge
counters until the next run.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

ACCEPTED = 'accepted'
REJECTED = 'rejected'
CRASHED = 'crashed'
TIMED_OUT = 'timed-out'

RUN_STATUSES = (ACCEPTED, REJECTED, CRASHED, TIMED_OUT)


class TargetError(Exception):
    """The target cannot be started (missing binary, spawn failure, no shared memory)."""


@dataclass(frozen=True)
class RunResult:
    status: str  # one of RUN_STATUSES
    reason: str = ''  # rejection reason code, or 'internal-failure' / 'signal' / 'exit' for crashes
    message: str = ''
    exit_code: Optional[int] = None
    signal: Optional[int] = None
    elapsed: float = 0.0
    top_frame: str = ''  # crashing function when the target reports one

    @property
    def crashed(self) -> bool:
        return self.status == CRASHED


class Target:
    """Base class; subclasses implement ``run``."""

    name = 'target'
    trace_bits: np.ndarray

    def run(self, source: str) -> RunResult:
        raise NotImplementedError

    def region_of_edge(self, edge: int) -> str:
        """Instrumentation region that produced `edge`."""
        raise NotImplementedError

    def close(self):
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def make_target(config) -> Target:
    """Build the target a CampaignConfig selects.

    Raises:
        TargetError: If an external target cannot be set up
    """
    if config.target == 'external':
        from targets.external import ExternalTarget
        return ExternalTarget(
            config.target_cmd,
            delivery=config.target_delivery,
            env_passthrough=config.target_env,
            shm_env_var=config.shm_env_var,
            timeout=config.timeout,
        )
    from targets.reference import ReferenceTarget
    return ReferenceTarget()
