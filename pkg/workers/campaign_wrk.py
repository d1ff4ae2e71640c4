"""
Campaign worker: runs one campaign instance in its own process and reports
progress on the status queue.

Status messages are tuples:
    ('stats', worker_name, record)    periodic stats record (dict of str)
    ('done', worker_name, summary)    final report summary (dict of str)
    ('error', worker_name, message)   the campaign could not run
"""

from config.campaign_config import ConfigError
from config.config import QUEUE_PUT_TIMEOUT
from engine.campaign import Campaign
from engine.executor import EngineError
from targets.base import TargetError
from util.error_utils import safe_queue_put
from util.log_utils import log_error, log_info


def run_worker(config, statusQueue, stop_event, logQueue=None, name="Campaign"):
    """
    Campaign worker entry point.

    Args:
        config: CampaignConfig of this instance (own seed and output directory)
        statusQueue: Queue for status messages to the process manager
        stop_event: Shared event; the campaign finishes its report when set
        logQueue: Queue drained by the process manager's log writer
        name: Worker name used in logs and status messages
    """
    log_info(logQueue, name, f"Starting campaign in {config.output_dir}")
    print(f"[{name}] Starting campaign in {config.output_dir}...")

    try:
        report = Campaign(config, log_queue=logQueue, status_queue=statusQueue,
                          stop_event=stop_event, name=name).run()
    except (ConfigError, TargetError, EngineError) as e:
        log_error(logQueue, name, f"Campaign failed: {e}")
        print(f"[{name}] Campaign failed: {e}")
        safe_queue_put(statusQueue, ('error', name, str(e)), timeout=QUEUE_PUT_TIMEOUT)
        return
    except KeyboardInterrupt:
        return

    safe_queue_put(statusQueue, ('done', name, report.summary()), timeout=QUEUE_PUT_TIMEOUT)
    log_info(logQueue, name, "Campaign worker stopped")
