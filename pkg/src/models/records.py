"""
Run records and result models
"""

from dataclasses import dataclass, field
from datetime import datetime
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field

from src.bandits.hierarchy import Partition


@dataclass
class RunRecord:
    """Trajectory of one seeded run.

    Per-step arrays are indexed by internal step t = 0..T-1. ``best_prefix[t]`` is
    max_a of the running mean totals after step t; ``best_prefix_realized`` is the same
    on drawn rewards.
    """

    run_id: str
    repeat: int
    p: Optional[int]
    clusters: np.ndarray
    arms: np.ndarray
    rewards: np.ndarray
    chosen_means: np.ndarray
    best_prefix: np.ndarray
    best_prefix_realized: np.ndarray
    mean_totals: np.ndarray
    reward_totals: np.ndarray
    work: int = 0
    execution_time_ms: float = 0.0
    partition: Optional[Partition] = field(default=None, repr=False)

    @property
    def horizon(self) -> int:
        return int(self.arms.size)


class SweepRow(BaseModel):
    """Final-regret statistics of one cluster count"""
    p: int
    mean_regret: float
    std_regret: float
    repeats: int


class ArmSweepRow(BaseModel):
    """Hierarchical against flat final regret at one arm count"""
    k: int
    p: int
    abob_mean: float
    flat_mean: float
    ratio: float


class TTestResult(BaseModel):
    """Welch two-sided test of sample_a against sample_b"""
    label_a: str
    label_b: str
    t_statistic: float
    p_value: float
    df: float
    mean_a: float
    mean_b: float


class ExperimentSummary(BaseModel):
    """Contents of summary.json"""
    command: str
    experiment: str
    seed: int
    config: Dict[str, Any]
    final_regrets: Dict[str, List[float]] = Field(default_factory=dict)
    comparisons: List[TTestResult] = Field(default_factory=list)
    skipped: List[str] = Field(default_factory=list)
    extras: Dict[str, Any] = Field(default_factory=dict)
    wall_clock_seconds: float = 0.0
    created_at: datetime = Field(default_factory=datetime.now)
