import time

from utils.performance_monitor import PerformanceMonitor


def test_track_records_a_suite(config_manager):
    monitor = PerformanceMonitor(config_manager, sample_interval=0.01)
    with monitor.track('flat-injectivity') as record:
        time.sleep(0.02)
    assert record['wall_time_s'] >= 0.02
    assert record['peak_memory_mb'] > 0
    summary = monitor.get_performance_summary()
    assert 'flat-injectivity' in summary['suites']
    assert summary['thresholds']['max_memory_mb'] == 2000.0


def test_budget_warnings():
    monitor = PerformanceMonitor(sample_interval=0.01)
    monitor.suite_time_budget = 0.0
    with monitor.track('cutoff'):
        pass
    warnings = monitor.check_performance_warnings()
    assert any('cutoff exceeded the time budget' in w for w in warnings)
    monitor.reset_metrics()
    assert monitor.get_performance_summary() == {'suites': {}, 'average_metrics': {}}
