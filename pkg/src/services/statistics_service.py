"""
Statistics Service
Welch's unequal-variance t-test and final-regret summaries
"""

from typing import Sequence, Tuple

import numpy as np
from scipy.special import betainc

from src.bandits.errors import StatisticsError
from src.config.logging_config import get_service_logger
from src.models.records import TTestResult


def _sample(values: Sequence[float], name: str) -> np.ndarray:
    sample = np.asarray(values, dtype=float).ravel()
    if sample.size < 2:
        raise StatisticsError(f"{name} needs at least 2 values, got {sample.size}")
    if not np.all(np.isfinite(sample)):
        raise StatisticsError(f"{name} holds non-finite values")
    return sample


def welch_t_test(sample_a: Sequence[float], sample_b: Sequence[float]) -> Tuple[float, float, float]:
    """Two-sided Welch test; returns (t, p, Welch-Satterthwaite degrees of freedom)"""
    a = _sample(sample_a, "sample_a")
    b = _sample(sample_b, "sample_b")
    va = a.var(ddof=1) / a.size
    vb = b.var(ddof=1) / b.size
    standard_error_sq = va + vb
    if standard_error_sq <= 0.0:
        raise StatisticsError("both samples have zero variance")
    t = float((a.mean() - b.mean()) / np.sqrt(standard_error_sq))
    df = float(standard_error_sq ** 2 / (va ** 2 / (a.size - 1) + vb ** 2 / (b.size - 1)))
    p = float(betainc(df / 2.0, 0.5, df / (df + t * t)))
    return t, min(max(p, 0.0), 1.0), df


def mean_and_std(values: Sequence[float]) -> Tuple[float, float]:
    """Mean and sample standard deviation; the deviation of one value is 0"""
    sample = np.asarray(values, dtype=float).ravel()
    if sample.size == 0:
        raise StatisticsError("no values to summarise")
    std = float(sample.std(ddof=1)) if sample.size > 1 else 0.0
    return float(sample.mean()), std


class StatisticsService:
    """Service wrapping the tests used in experiment summaries"""

    def __init__(self):
        self.logger = get_service_logger("statistics")

    def compare(self, label_a: str, sample_a: Sequence[float], label_b: str, sample_b: Sequence[float]) -> TTestResult:
        try:
            t, p, df = welch_t_test(sample_a, sample_b)
        except StatisticsError as e:
            self.logger.log_function_error("compare", e, label_a=label_a, label_b=label_b)
            raise
        result = TTestResult(
            label_a=label_a, label_b=label_b, t_statistic=t, p_value=p, df=df,
            mean_a=float(np.mean(sample_a)), mean_b=float(np.mean(sample_b)),
        )
        self.logger.info("Welch test", label_a=label_a, label_b=label_b, t=t, p=p)
        return result


statistics_service = StatisticsService()
