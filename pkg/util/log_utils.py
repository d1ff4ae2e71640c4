"""Minimal logging utilities for campaign workers and library code."""

import logging

_LEVELS = {
    'DEBUG': logging.DEBUG,
    'INFO': logging.INFO,
    'WARN': logging.WARNING,
    'ERROR': logging.ERROR,
}

LOG_FORMAT = '[%(asctime)s] [%(levelname)-5s] [%(name)-15s] %(message)s'
LOG_DATE_FORMAT = '%Y-%m-%d %H:%M:%S'


def log(logQueue, level, worker_name, message):
    """
    Send a log message to the log queue.

    Without a queue (single in-process campaign, tests) the message goes to
    the standard logging module under a logger named after the worker.

    Args:
        logQueue: Queue to send log messages to, or None
        level: 'INFO', 'WARN', 'ERROR', 'DEBUG'
        worker_name: Name of the worker (e.g., 'Campaign')
        message: Log message string
    """
    if logQueue is None:
        logging.getLogger(worker_name).log(_LEVELS.get(level, logging.INFO), message)
        return

    try:
        logQueue.put_nowait((level, worker_name, message))
    except Exception:
        try:
            logQueue.put((level, worker_name, message), timeout=0.01)
        except Exception:
            # Can't log, queue full - drop message
            pass


def log_error(logQueue, worker_name, message):
    """Convenience wrapper for ERROR level."""
    log(logQueue, 'ERROR', worker_name, message)


def log_warning(logQueue, worker_name, message):
    """Convenience wrapper for WARN level."""
    log(logQueue, 'WARN', worker_name, message)


def log_info(logQueue, worker_name, message):
    """Convenience wrapper for INFO level."""
    log(logQueue, 'INFO', worker_name, message)


def log_debug(logQueue, worker_name, message):
    """Convenience wrapper for DEBUG level."""
    log(logQueue, 'DEBUG', worker_name, message)


def configure_console_logging(log_file=None, verbose=False):
    """Configure the logging module with the same line format the
    ProcessHandler log writer uses.

    Args:
        log_file: Optional path of a log file to append to
        verbose: Log DEBUG entries as well
    """
    handlers = [logging.StreamHandler()]
    if log_file:
        handlers.append(logging.FileHandler(log_file, encoding='utf-8'))
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format=LOG_FORMAT,
        datefmt=LOG_DATE_FORMAT,
        handlers=handlers,
        force=True,
    )
