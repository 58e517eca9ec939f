"""
Progress Tracking
Reports per-stage progress of long sweeps (explaining a split, flipping
curves, grid search) through the run logger.
"""
import logging
import threading
import time

logger = logging.getLogger(__name__)


class ProgressTracker:
    """Track stage progress; safe to advance from worker threads."""

    def __init__(self, run_id: str = '', step_percent: int = 10):
        self.run_id = run_id
        self.step_percent = step_percent
        self.start_times = {}
        self._totals = {}
        self._done = {}
        self._last_reported = {}
        self._lock = threading.Lock()

    def emit_progress(self, stage: str, progress: float, message: str = ''):
        logger.info(
            "[%s] %5.1f%% %s",
            stage,
            min(100.0, max(0.0, progress)),
            message,
            extra={'stage': stage, 'progress': progress},
        )

    def start_stage(self, stage: str, total: int):
        with self._lock:
            self.start_times[stage] = time.time()
            self._totals[stage] = max(0, int(total))
            self._done[stage] = 0
            self._last_reported[stage] = 0.0
        self.emit_progress(stage, 0, f'starting ({total} items)')

    def advance(self, stage: str, count: int = 1):
        with self._lock:
            if stage not in self._totals:
                return
            self._done[stage] += count
            total = self._totals[stage] or 1
            progress = 100.0 * self._done[stage] / total
            if progress - self._last_reported[stage] < self.step_percent:
                return
            self._last_reported[stage] = progress
            done = self._done[stage]
        self.emit_progress(stage, progress, f'{done}/{total}')

    def progress(self, stage: str) -> float:
        with self._lock:
            total = self._totals.get(stage)
            if not total:
                return 0.0
            return 100.0 * self._done[stage] / total

    def complete_stage(self, stage: str):
        elapsed = time.time() - self.start_times.get(stage, time.time())
        self.emit_progress(stage, 100, f'complete ({elapsed:.1f}s)')

    def complete_all(self):
        if not self.start_times:
            return
        total_elapsed = time.time() - min(self.start_times.values())
        logger.info("All stages complete (%.1fs total)", total_elapsed)

    def emit_error(self, stage: str, error_message: str):
        logger.error("[%s] failed: %s", stage, error_message, extra={'stage': stage})


def create_progress_tracker(run_id: str = '') -> ProgressTracker:
    return ProgressTracker(run_id)
