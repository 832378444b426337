"""Estimator-style wrapper: ``TimetableSolver(...).fit(instance)``."""
from __future__ import annotations

from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .model import evaluate
from .orchestrator import RunConfig, run


class TimetableSolver(BaseEstimator):
    """Solve one instance per ``fit``; results land in trailing-underscore attributes.

    Hyperparameters mirror ``RunConfig``; anything not listed here keeps its
    default.
    """

    def __init__(self, total_time=600.0, time_scale=1.0, worker_count=4, seed=0, rho_failure_threshold=6,
                 cooling=0.999, sa_max_no_improve=5000, phase3_pool_size=4):
        self.total_time = total_time
        self.time_scale = time_scale
        self.worker_count = worker_count
        self.seed = seed
        self.rho_failure_threshold = rho_failure_threshold
        self.cooling = cooling
        self.sa_max_no_improve = sa_max_no_improve
        self.phase3_pool_size = phase3_pool_size

    def _config(self):
        half = self.total_time / 2
        return RunConfig(total_time=self.total_time, phase12_budget=half, phase3_budget=half,
                         time_scale=self.time_scale, worker_count=self.worker_count, seed=self.seed,
                         rho_failure_threshold=self.rho_failure_threshold, cooling=self.cooling,
                         sa_max_no_improve=self.sa_max_no_improve, phase3_pool_size=self.phase3_pool_size)

    def fit(self, instance, y=None, log_stream=None):
        report = run(instance, self._config(), log_stream=log_stream)
        self.instance_ = instance
        self.report_ = report
        self.schedule_ = report.schedule
        self.cost_ = report.breakdown
        self.lower_bound_ = report.lower_bound
        self.status_ = report.status
        return self

    def _check(self):
        if not hasattr(self, "report_"):
            raise NotFittedError("call fit first")

    def predict(self, instance=None):
        """The fitted schedule (``instance``, if given, must be the fitted one)."""
        self._check()
        if instance is not None and instance is not self.instance_:
            raise ValueError("predict only returns the schedule of the fitted instance")
        return self.schedule_

    def score(self, instance=None, y=None):
        """Negated total cost, so larger is better."""
        self._check()
        if self.schedule_ is None:
            return float("-inf")
        return -evaluate(self.instance_, self.schedule_).total
