"""
Adapter for external, AFL-instrumented shader translators.

Harness contract:

* The coverage map is a 65 536-byte file under /dev/shm (or the temp dir
  where /dev/shm is missing). Its absolute path is passed to the target in
  the environment variable named by ``shm_env_var`` (``__AFL_SHM_ID`` by
  default). The target increments byte counters in it; the adapter zeroes
  it before every run.
* The shader is delivered either as a file whose path replaces every
  ``{input}`` placeholder in argv, or on standard input.
* Exit status 0 means accepted, 1 means rejected. Any other exit status,
  and death by a signal, is a crash. Runs exceeding the timeout are killed
  together with their process group and reported as timed out.

A two-stage system (front-end then back-end compiler) is run as one
pipeline command, e.g. ``sh -c "tint {input} -o out.hlsl && dxc out.hlsl"``;
the map then holds the union of both stages' coverage.
"""

import mmap
import os
import re
import shutil
import signal
import subprocess
import tempfile
import time
import uuid
from typing import List, Optional, Sequence, Tuple

import numpy as np

from config.config import MAP_SIZE, SHM_DIR, SHM_ENV_VAR, EXEC_TIMEOUT
from targets.base import Target, TargetError, RunResult, ACCEPTED, REJECTED, CRASHED, TIMED_OUT
from targets.instrumentation import EXTERNAL_REGION
from util.log_utils import log_warning

NAME = 'ExternalTarget'

EXIT_ACCEPTED = 0
EXIT_REJECTED = 1
INPUT_PLACEHOLDER = '{input}'
STDERR_KEEP = 4096  # bytes of stderr kept for crash messages

# sanitizer report frame "#0 0x4f3a2b in tint::Foo::Bar(...) file.cc:12"
_TOP_FRAME = re.compile(r'#0 0x[0-9a-fA-F]+ in (\S+)')
_ALWAYS_PASSED = ('PATH', 'HOME', 'TMPDIR', 'LANG')


def _shm_directory() -> str:
    return SHM_DIR if os.path.isdir(SHM_DIR) else tempfile.gettempdir()


def top_frame(stderr: str) -> str:
    """Name of the crashing function in a sanitizer report, '' if there is none."""
    match = _TOP_FRAME.search(stderr)
    return match.group(1) if match else ''


class ExternalTarget(Target):
    """One child process per execution, coverage through a shared memory file.

    Raises:
        TargetError: From the constructor if the binary is missing or the
            shared memory region cannot be created
    """

    name = 'external'

    def __init__(self, argv: Sequence[str], delivery: str = 'file', env_passthrough: Sequence[str] = (),
                 shm_env_var: str = SHM_ENV_VAR, timeout: float = EXEC_TIMEOUT):
        if not argv:
            raise TargetError("empty target command")
        if delivery not in ('file', 'stdin'):
            raise TargetError(f"unknown delivery mode '{delivery}'")
        self.argv = list(argv)
        self.delivery = delivery
        self.env_passthrough = list(env_passthrough)
        self.shm_env_var = shm_env_var
        self.timeout = timeout
        self.binary = self._resolve_binary(self.argv[0])

        self.work_dir = tempfile.mkdtemp(prefix='shaderfuzz_')
        self.input_path = os.path.join(self.work_dir, 'input.wgsl')
        self.shm_path = os.path.join(_shm_directory(), f"shaderfuzz_shm_{os.getpid()}_{uuid.uuid4().hex[:8]}")
        self._shm = self._create_shared_memory(self.shm_path)
        self.trace_bits = np.frombuffer(self._shm, dtype=np.uint8)

    @staticmethod
    def _resolve_binary(program: str) -> str:
        if os.sep in program:
            if not (os.path.isfile(program) and os.access(program, os.X_OK)):
                raise TargetError(f"target binary not found or not executable: {program}")
            return program
        found = shutil.which(program)
        if found is None:
            raise TargetError(f"target binary not found on PATH: {program}")
        return found

    @staticmethod
    def _create_shared_memory(path: str) -> mmap.mmap:
        try:
            fd = os.open(path, os.O_CREAT | os.O_RDWR, 0o666)
        except OSError as e:
            raise TargetError(f"cannot create shared memory {path}: {e}")
        try:
            os.ftruncate(fd, MAP_SIZE)
            mm = mmap.mmap(fd, MAP_SIZE, mmap.MAP_SHARED, mmap.PROT_READ | mmap.PROT_WRITE)
            mm.write(b'\x00' * MAP_SIZE)
            mm.seek(0)
            return mm
        except (OSError, ValueError) as e:
            raise TargetError(f"cannot map shared memory {path}: {e}")
        finally:
            os.close(fd)

    def _environment(self) -> dict:
        env = {}
        for name in _ALWAYS_PASSED + tuple(self.env_passthrough):
            if name in os.environ:
                env[name] = os.environ[name]
        env[self.shm_env_var] = self.shm_path
        return env

    def _command(self) -> List[str]:
        argv = [self.binary] + self.argv[1:]
        if self.delivery == 'file':
            argv = [a.replace(INPUT_PLACEHOLDER, self.input_path) for a in argv]
        return argv

    def run(self, source: str) -> RunResult:
        self.trace_bits.fill(0)
        data = source.encode('utf-8', errors='replace')
        if self.delivery == 'file':
            with open(self.input_path, 'wb') as f:
                f.write(data)

        start = time.perf_counter()
        try:
            proc = subprocess.Popen(
                self._command(),
                stdin=subprocess.PIPE if self.delivery == 'stdin' else subprocess.DEVNULL,
                stdout=subprocess.DEVNULL,
                stderr=subprocess.PIPE,
                env=self._environment(),
                cwd=self.work_dir,
                start_new_session=True,
            )
        except OSError as e:
            raise TargetError(f"cannot start {self.binary}: {e}")

        try:
            _, stderr = proc.communicate(data if self.delivery == 'stdin' else None, timeout=self.timeout)
        except subprocess.TimeoutExpired:
            self._kill_group(proc)
            proc.communicate()
            return RunResult(TIMED_OUT, message=f"no exit after {self.timeout}s",
                             elapsed=time.perf_counter() - start)
        elapsed = time.perf_counter() - start
        return self._classify(proc.returncode, stderr or b'', elapsed)

    @staticmethod
    def _kill_group(proc: subprocess.Popen):
        try:
            os.killpg(proc.pid, signal.SIGKILL)
        except (ProcessLookupError, PermissionError):
            proc.kill()

    @staticmethod
    def _classify(returncode: int, stderr: bytes, elapsed: float) -> RunResult:
        text = stderr[-STDERR_KEEP:].decode('utf-8', errors='replace')
        if returncode == EXIT_ACCEPTED:
            return RunResult(ACCEPTED, exit_code=returncode, elapsed=elapsed)
        if returncode == EXIT_REJECTED:
            return RunResult(REJECTED, 'exit', text.strip(), exit_code=returncode, elapsed=elapsed)
        if returncode < 0:
            signum = -returncode
            return RunResult(CRASHED, 'signal', text, signal=signum, elapsed=elapsed, top_frame=top_frame(text))
        return RunResult(CRASHED, 'exit', text, exit_code=returncode, elapsed=elapsed, top_frame=top_frame(text))

    def region_of_edge(self, edge: int) -> str:
        return EXTERNAL_REGION

    def close(self):
        if self._shm is not None:
            # our own view exports the mapping's buffer and goes first
            self.trace_bits = np.zeros(MAP_SIZE, dtype=np.uint8)
            try:
                self._shm.close()
            except BufferError:
                # unmapped once the last outside view is collected
                log_warning(None, NAME, f"coverage map {self.shm_path} is still viewed; unmapping deferred")
            self._shm = None
        try:
            os.unlink(self.shm_path)
        except OSError:
            pass
        shutil.rmtree(self.work_dir, ignore_errors=True)


def run_external(target: ExternalTarget, source: str) -> Tuple[RunResult, np.ndarray]:
    """Execute one shader and return the outcome with a copy of the raw map."""
    result = target.run(source)
    return result, target.trace_bits.copy()


def signal_name(signum: Optional[int]) -> str:
    if signum is None:
        return ''
    try:
        return signal.Signals(signum).name
    except ValueError:
        return f"SIG{signum}"
