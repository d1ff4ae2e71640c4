# process_man.py
"""Process manager: create and manage campaign worker processes and queues.

This module exposes `ProcessHandler`, which runs N independent campaign
instances (``fuzz --instances N``). Each instance is a separate
`multiprocessing.Process` with its own RNG seed and output directory; the
instances share nothing but the status queue, the log queue and the global
stop event. The manager also runs a background log writer thread that drains
`logQueue` into `<output>/LOG_FILE_NAME`.

`stop_workers()` uses a shutdown lock to avoid race conditions from repeated
signals.
"""

from multiprocessing import Process, Queue, Event
import os
import signal
import threading
import time

from config.config import (
    QUEUE_SIZE_STATUS,
    QUEUE_SIZE_LOG,
    QUEUE_GET_TIMEOUT,
    LOG_FILE_NAME,
    LOG_FILE_MAX_SIZE,
    LOG_QUEUE_TIMEOUT,
    WORKER_JOIN_TIMEOUT
)
from util.error_utils import safe_queue_get


class ProcessHandler:
    """Manager for campaign worker processes and shared queues.

    Responsibilities:
    - Create and own the status and log queues and the global stop event.
    - Start one campaign worker per instance.
    - Collect status messages and final summaries.
    - Provide `stop_workers()` that signals shutdown and cleans up processes.
    - Run a background log writer thread that persists log entries to disk.
    """

    def __init__(self, config, install_signals=True):
        self.config = config
        os.makedirs(config.output_dir, exist_ok=True)
        self.log_path = os.path.join(config.output_dir, LOG_FILE_NAME)

        ## Init Queues
        self.statusQueue = Queue(maxsize=QUEUE_SIZE_STATUS)
        self.logQueue = Queue(maxsize=QUEUE_SIZE_LOG)

        ## Init stop event
        self.stop_event = Event()
        # stops the log writer after the workers are gone
        self._log_stop = threading.Event()

        ## Workers
        self.workers = []
        self.summaries = {}
        self.errors = {}

        ## Signal Handlers
        if install_signals:
            signal.signal(signal.SIGINT, self._signal_handler)
            signal.signal(signal.SIGTERM, self._signal_handler)

        ## Start log writer thread
        self.log_thread = threading.Thread(target=self._log_writer, daemon=True)
        self.log_thread.start()

        # Shutdown lock to prevent race conditions when stopping workers
        # (e.g., signal handler vs. explicit shutdown)
        self._shutdown_lock = threading.Lock()
        self._stopping = False

    def _log_writer(self):
        """Background thread that writes log messages from `logQueue` to file.

        Entries are tuples `(level, worker_name, message)`; they are
        timestamped and appended to the log file. The file is rotated when it
        exceeds `LOG_FILE_MAX_SIZE`. Malformed entries are dropped.
        """
        from datetime import datetime
        from queue import Empty

        # Rotate log if it gets too large
        try:
            if os.path.exists(self.log_path) and os.path.getsize(self.log_path) > LOG_FILE_MAX_SIZE:
                backup = os.path.join(self.config.output_dir,
                                      f"shaderfuzz_{datetime.now().strftime('%Y%m%d_%H%M%S')}.log")
                os.rename(self.log_path, backup)
        except Exception:
            pass

        try:
            with open(self.log_path, 'a', encoding='utf-8') as f:
                while not self._log_stop.is_set():
                    try:
                        # Log format: (level, worker_name, message)
                        log_entry = self.logQueue.get(timeout=LOG_QUEUE_TIMEOUT)

                        if isinstance(log_entry, tuple) and len(log_entry) >= 3:
                            level, worker, msg = log_entry[0], log_entry[1], log_entry[2]
                            timestamp = datetime.now().strftime('%Y-%m-%d %H:%M:%S')
                            line = f"[{timestamp}] [{level:5s}] [{worker:15s}] {msg}\n"
                            f.write(line)
                            f.flush()

                    except Empty:
                        pass
                    except Exception:
                        pass
        except Exception as e:
            print(f"[ProcessHandler] Log writer error: {e}")

    def _signal_handler(self, signum, frame):
        """Handle SIGINT/SIGTERM: ask the campaigns to finish their reports.

        Workers see the stop event between iterations and write their final
        report; `wait()` then returns and the caller runs `stop_workers()`.
        """
        print("\n[ProcessHandler] Shutdown signal received, stopping campaigns...")
        self.stop_event.set()

    def start_workers(self):
        """Create and start one campaign worker per instance."""
        print(f"[ProcessHandler] Starting {self.config.instances} campaign worker(s)...")

        ## Import worker target here to avoid circular import
        from workers.campaign_wrk import run_worker as run_campaign_worker

        for index in range(self.config.instances):
            name = f"Campaign-{index}"
            worker = Process(
                target=run_campaign_worker,
                args=(self.config.for_instance(index), self.statusQueue,
                      self.stop_event, self.logQueue, name),
                name=name,
            )
            worker.start()
            self.workers.append(worker)

        print("[ProcessHandler] All workers started.")

    def _handle_status(self, message):
        if not isinstance(message, tuple) or len(message) < 3:
            return
        kind, worker, payload = message[0], message[1], message[2]
        if kind == 'stats':
            print(f"[{worker}] execs={payload.get('execs')} edges={payload.get('edges')} "
                  f"corpus={payload.get('corpus_size')} crashes={payload.get('crashes')}")
        elif kind == 'done':
            self.summaries[worker] = payload
        elif kind == 'error':
            self.errors[worker] = payload

    def wait(self):
        """Print status lines until every worker has exited."""
        while any(w.is_alive() for w in self.workers):
            message = safe_queue_get(self.statusQueue, timeout=QUEUE_GET_TIMEOUT, default=None)
            if message is not None:
                self._handle_status(message)
        # drain what arrived after the last poll
        while True:
            message = safe_queue_get(self.statusQueue, timeout=0.0, default=None)
            if message is None:
                break
            self._handle_status(message)

    def stop_workers(self):
        """Stop and cleanup all worker processes.

        The shutdown flow is:
        - Acquire shutdown lock to prevent re-entrancy.
        - Set the global `stop_event` so workers can exit cleanly.
        - Force-terminate remaining alive processes and join them with a
          timeout (`WORKER_JOIN_TIMEOUT`).
        - Stop the log writer thread.

        This method is safe to call multiple times; concurrent calls will be
        ignored while a shutdown is in progress.
        """
        # Prevent concurrent shutdown attempts
        acquired = self._shutdown_lock.acquire(blocking=False)
        if not acquired:
            print("[ProcessHandler] stop_workers already in progress, skipping duplicate call.")
            return

        try:
            if self._stopping:
                return

            self._stopping = True

            # Signal workers to stop
            self.stop_event.set()
            deadline = time.monotonic() + WORKER_JOIN_TIMEOUT
            for worker in self.workers:
                worker.join(timeout=max(0.0, deadline - time.monotonic()))

            # Terminate any remaining alive processes
            for worker in self.workers:
                try:
                    if worker.is_alive():
                        worker.terminate()
                except Exception:
                    pass

            # Join with timeout and force-kill if necessary
            for worker in self.workers:
                try:
                    worker.join(timeout=WORKER_JOIN_TIMEOUT)
                    if worker.is_alive():
                        print(f"[ProcessHandler] Warning: Worker {worker.name} did not terminate in time.")
                        try:
                            worker.kill()
                        except Exception:
                            pass
                except Exception:
                    pass

            self._log_stop.set()
            self.log_thread.join(timeout=WORKER_JOIN_TIMEOUT)
            print("[ProcessHandler] All workers stopped.")
        finally:
            self._stopping = False
            try:
                self._shutdown_lock.release()
            except RuntimeError:
                # lock wasn't acquired or already released
                pass
