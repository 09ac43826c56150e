"""
Performance Monitor Module
Tracks wall time, CPU time and memory of ledger evaluations and verification suites
"""

import psutil
import time
import threading
import logging
from collections import deque
from contextlib import contextmanager
from typing import Dict, Iterator, List
import numpy as np


class PerformanceMonitor:
    """Records resource usage per tracked suite"""

    def __init__(self, config_manager=None, history_size: int = 100, sample_interval: float = 0.2):
        self.logger = logging.getLogger(__name__)
        self.history_size = history_size
        self.sample_interval = sample_interval

        # Per-suite metrics storage
        self.wall_history = deque(maxlen=history_size)
        self.cpu_history = deque(maxlen=history_size)
        self.memory_history = deque(maxlen=history_size)
        self.records: Dict[str, Dict] = {}

        # Performance thresholds (from config)
        self.max_memory_mb = 2000.0
        self.suite_time_budget = 60.0
        if config_manager:
            self.max_memory_mb = float(config_manager.get_max_memory_mb())
            self.suite_time_budget = config_manager.get_suite_time_budget()

        # Sampling control
        self._sampling_active = False
        self._sample_thread = None
        self._peak_memory_mb = 0.0

        # Process reference for accurate monitoring
        self.process = psutil.Process()

        self.logger.info("PerformanceMonitor initialized")

    def _current_memory_mb(self) -> float:
        return self.process.memory_info().rss / 1024 / 1024

    def _sample_loop(self):
        """Peak-memory sampling loop running in a separate thread"""
        while self._sampling_active:
            try:
                self._peak_memory_mb = max(self._peak_memory_mb, self._current_memory_mb())
                time.sleep(self.sample_interval)
            except Exception as e:
                self.logger.error(f"Error in sampling loop: {e}")
                time.sleep(self.sample_interval)

    @contextmanager
    def track(self, label: str) -> Iterator[Dict]:
        """
        Measure one suite

        Args:
            label: suite name used as the record key

        Yields:
            The record dict, filled in when the block exits
        """
        record = {'label': label}
        self._peak_memory_mb = self._current_memory_mb()
        self._sampling_active = True
        self._sample_thread = threading.Thread(target=self._sample_loop, daemon=True)
        self._sample_thread.start()
        cpu_start = self.process.cpu_times()
        wall_start = time.perf_counter()
        try:
            yield record
        finally:
            wall = time.perf_counter() - wall_start
            cpu_end = self.process.cpu_times()
            self._sampling_active = False
            self._sample_thread.join(timeout=2.0)
            peak = max(self._peak_memory_mb, self._current_memory_mb())
            record.update({
                'wall_time_s': wall,
                'cpu_time_s': (cpu_end.user - cpu_start.user) + (cpu_end.system - cpu_start.system),
                'peak_memory_mb': peak,
            })
            self.records[label] = record
            self.wall_history.append(wall)
            self.cpu_history.append(record['cpu_time_s'])
            self.memory_history.append(peak)

            if wall > self.suite_time_budget:
                self.logger.warning(f"{label} took {wall:.1f} s (budget {self.suite_time_budget:.0f} s)")
            if peak > self.max_memory_mb:
                self.logger.warning(f"High memory usage in {label}: {peak:.1f} MB")
            self.logger.info(f"{label}: {wall:.2f} s wall, {record['cpu_time_s']:.2f} s CPU, {peak:.0f} MB peak")

    def get_performance_summary(self) -> Dict:
        """Get per-suite records plus averages"""
        try:
            if not self.wall_history:
                return {'suites': {}, 'average_metrics': {}}
            return {
                'suites': dict(self.records),
                'average_metrics': {
                    'avg_wall_time_s': float(np.mean(self.wall_history)),
                    'avg_cpu_time_s': float(np.mean(self.cpu_history)),
                    'avg_peak_memory_mb': float(np.mean(self.memory_history)),
                },
                'thresholds': {
                    'max_memory_mb': self.max_memory_mb,
                    'suite_time_budget_s': self.suite_time_budget,
                },
            }

        except Exception as e:
            self.logger.error(f"Error getting performance summary: {e}")
            return {}

    def check_performance_warnings(self) -> List[str]:
        """List suites over their time or memory budget"""
        warnings = []
        for label, record in self.records.items():
            if record.get('wall_time_s', 0.0) > self.suite_time_budget:
                warnings.append(f"{label} exceeded the time budget: {record['wall_time_s']:.1f} s")
            if record.get('peak_memory_mb', 0.0) > self.max_memory_mb:
                warnings.append(f"{label} exceeded the memory budget: {record['peak_memory_mb']:.0f} MB")
        return warnings

    def reset_metrics(self):
        """Reset all performance metrics"""
        self.wall_history.clear()
        self.cpu_history.clear()
        self.memory_history.clear()
        self.records.clear()
        self.logger.info("Performance metrics reset")
