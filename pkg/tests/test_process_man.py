import os

import pytest

from config.campaign_config import CampaignConfig
from process_man import ProcessHandler
from workers.campaign_wrk import run_worker


class _ListQueue:
    def __init__(self):
        self.items = []

    def put(self, item, timeout=None):
        self.items.append(item)

    def put_nowait(self, item):
        self.items.append(item)


class _NeverSet:
    def is_set(self):
        return False


def test_worker_reports_done(tmp_path):
    cfg = CampaignConfig(output_dir=str(tmp_path / 'w'), max_execs=5, generator_count=2,
                         stability_repeats=2, minimize_max_execs=5)
    status = _ListQueue()
    run_worker(cfg, status, _NeverSet(), None, 'Campaign-0')
    kinds = [item[0] for item in status.items]
    assert kinds[-1] == 'done'
    assert status.items[-1][2]['execs'] == '5'


def test_worker_reports_errors(tmp_path):
    cfg = CampaignConfig(output_dir=str(tmp_path / 'w'))
    status = _ListQueue()
    run_worker(cfg, status, _NeverSet(), None, 'Campaign-0')
    assert status.items[-1][0] == 'error'
    assert 'budget' in status.items[-1][2]


@pytest.mark.slow
def test_instances_run_in_own_directories(tmp_path):
    cfg = CampaignConfig(output_dir=str(tmp_path / 'multi'), max_execs=10, generator_count=2,
                         stability_repeats=2, minimize_max_execs=5, instances=2, seed=3)
    handler = ProcessHandler(cfg, install_signals=False)
    handler.start_workers()
    try:
        handler.wait()
    finally:
        handler.stop_workers()
    assert handler.errors == {}
    assert sorted(handler.summaries) == ['Campaign-0', 'Campaign-1']
    assert [handler.summaries[f"Campaign-{i}"]['seed'] for i in range(2)] == ['3', '4']
    for i in range(2):
        assert os.path.exists(os.path.join(cfg.output_dir, f"instance_{i}", 'report.txt'))
