"""
Experiment configuration models
"""

import math
from enum import Enum
from pathlib import Path
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.bandits.algorithms import PolicyKind
from src.bandits.environments import RewardKind


class EnvironmentKind(str, Enum):
    """Reward generator families"""
    STOCHASTIC_GAP = "stochastic_gap"
    PHASED_ADVERSARIAL = "phased_adversarial"
    METRIC = "metric"
    CLUSTERED_GAP = "clustered_gap"
    TRACE = "trace"


class AlgorithmMode(str, Enum):
    """Flat policy or two-level hierarchy"""
    FLAT = "flat"
    ABOB = "abob"


class PartitionMethod(str, Enum):
    """How arms are grouped into clusters"""
    GRID = "grid"
    KMEANS = "kmeans"
    SHUFFLED = "shuffled"
    ROUND_ROBIN = "round_robin"
    FILE = "file"


class RegretKind(str, Enum):
    """Expected rewards (pseudo) or drawn rewards (realized)"""
    PSEUDO = "pseudo"
    REALIZED = "realized"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", use_enum_values=False)


class ExperimentSection(_Section):
    name: str = Field(default="experiment", min_length=1, description="Experiment name, used in run ids")
    horizon: int = Field(default=100_000, ge=1, description="Steps per run (T)")
    repeats: int = Field(default=10, ge=1, description="Seeded repeats per configuration point")
    seed: int = Field(default=0, ge=0, description="Master seed")
    workers: Optional[int] = Field(default=None, ge=1, description="Worker processes; settings default when unset")
    output_dir: Optional[str] = Field(default=None, description="Output directory; settings default when unset")
    regret: RegretKind = Field(default=RegretKind.PSEUDO, description="Regret on means or on drawn rewards")
    baseline: bool = Field(default=False, description="Also run the flat child algorithm and t-test against it")
    trajectory_max_rows: Optional[int] = Field(default=None, ge=2, description="Row cap per run in trajectory.csv")


class ArmsSection(_Section):
    k: int = Field(default=256, ge=1, description="Number of arms")
    d: int = Field(default=1, ge=1, le=3, description="Dimension of the arm grid")


class EnvironmentSection(_Section):
    kind: EnvironmentKind = Field(default=EnvironmentKind.STOCHASTIC_GAP)
    delta: float = Field(default=0.1, description="Gap for stochastic and phased environments")
    best_arm: int = Field(default=0, ge=0)
    base_phase: int = Field(default=50, ge=1, description="Length of the first phase")
    sigma: Optional[float] = Field(default=None, ge=0, description="Random-walk step std; grid spacing / 100 when unset")
    start: Optional[List[float]] = Field(default=None, description="Initial optimum; centre of Q when unset")
    clusters: int = Field(default=16, ge=1, description="Clustered gap: number of clusters")
    arms_per_cluster: int = Field(default=16, ge=1, description="Clustered gap: arms per cluster")
    between_gap: float = Field(default=0.2, ge=0, description="Clustered gap: L")
    within_gap: float = Field(default=0.05, ge=0, description="Clustered gap: l")
    top_mean: float = Field(default=0.9, le=1, description="Clustered gap: mean of the best arm")
    trace_path: Optional[str] = Field(default=None, description="CSV trace t,arm_0,...")
    features_path: Optional[str] = Field(default=None, description="CSV arm,x_0,... for trace arms")
    reward_kind: Optional[RewardKind] = Field(default=None, description="bernoulli, uniform or exact")
    reward_width: float = Field(default=0.0, ge=0, description="Width of uniform rewards")

    @property
    def effective_reward_kind(self) -> RewardKind:
        if self.reward_kind is not None:
            return self.reward_kind
        return RewardKind.EXACT if self.kind is EnvironmentKind.TRACE else RewardKind.BERNOULLI


class AlgorithmSection(_Section):
    kind: AlgorithmMode = Field(default=AlgorithmMode.ABOB)
    policy: PolicyKind = Field(default=PolicyKind.TSALLIS_INF, description="Policy of a flat run")
    parent: PolicyKind = Field(default=PolicyKind.TSALLIS_INF)
    child: PolicyKind = Field(default=PolicyKind.TSALLIS_INF)
    ucb_alpha: float = Field(default=math.sqrt(2.0), gt=0)
    tsallis_eta_scale: float = Field(default=1.0, gt=0)


class PartitionSection(_Section):
    method: PartitionMethod = Field(default=PartitionMethod.GRID)
    clusters: int = Field(default=16, ge=1, description="Cluster count p")
    path: Optional[str] = Field(default=None, description="CSV arm,cluster for method = file")


class SweepSection(_Section):
    clusters: Optional[List[int]] = Field(default=None, description="Cluster counts; powers of two up to k when unset")
    arm_counts: List[int] = Field(default_factory=list, description="Arm counts for the arm-count sweep")


class LipschitzSection(_Section):
    neighbors: int = Field(default=4, ge=1)
    shuffles: int = Field(default=10, ge=1)


class ExperimentConfig(_Section):
    """Complete experiment description, loaded from a TOML file"""
    experiment: ExperimentSection = Field(default_factory=ExperimentSection)
    arms: ArmsSection = Field(default_factory=ArmsSection)
    environment: EnvironmentSection = Field(default_factory=EnvironmentSection)
    algorithm: AlgorithmSection = Field(default_factory=AlgorithmSection)
    partition: PartitionSection = Field(default_factory=PartitionSection)
    sweep: SweepSection = Field(default_factory=SweepSection)
    lipschitz: LipschitzSection = Field(default_factory=LipschitzSection)

    @model_validator(mode="after")
    def check_environment(self) -> "ExperimentConfig":
        env = self.environment
        k = self.arms.k
        if env.kind in (EnvironmentKind.STOCHASTIC_GAP, EnvironmentKind.PHASED_ADVERSARIAL):
            if not (0.0 <= env.delta <= 1.0):
                raise ValueError(f"environment.delta must lie in [0, 1], got {env.delta}")
            if env.best_arm >= k:
                raise ValueError(f"environment.best_arm={env.best_arm} must be < arms.k={k}")
        elif env.kind is EnvironmentKind.CLUSTERED_GAP:
            if env.clusters * env.arms_per_cluster != k:
                raise ValueError(
                    f"clustered gap needs arms.k = clusters x arms_per_cluster, "
                    f"got {k} != {env.clusters} x {env.arms_per_cluster}"
                )
            if env.top_mean - env.between_gap - env.within_gap < 0:
                raise ValueError("clustered gap means fall below 0: top_mean - between_gap - within_gap < 0")
        elif env.kind is EnvironmentKind.METRIC:
            if not _is_perfect_power(k, self.arms.d):
                raise ValueError(f"metric environment needs k^(1/d) integer, got k={k}, d={self.arms.d}")
            if env.start is not None and len(env.start) != self.arms.d:
                raise ValueError(f"environment.start needs {self.arms.d} coordinates")
        elif env.kind is EnvironmentKind.TRACE:
            if env.trace_path is None:
                raise ValueError("trace environment needs environment.trace_path")
            if not Path(env.trace_path).is_file():
                raise ValueError(f"trace file not found: {env.trace_path}")
        if env.features_path is not None and not Path(env.features_path).is_file():
            raise ValueError(f"features file not found: {env.features_path}")
        if env.effective_reward_kind is RewardKind.UNIFORM and env.reward_width == 0:
            raise ValueError("uniform rewards need environment.reward_width > 0")
        return self

    @model_validator(mode="after")
    def check_partition(self) -> "ExperimentConfig":
        if self.algorithm.kind is AlgorithmMode.ABOB:
            message = cluster_count_problem(self, self.partition.clusters)
            if message:
                raise ValueError(message)
        if self.partition.method is PartitionMethod.FILE:
            if self.partition.path is None or not Path(self.partition.path).is_file():
                raise ValueError(f"partition file not found: {self.partition.path}")
        return self

    def sweep_cluster_values(self) -> List[int]:
        if self.sweep.clusters:
            return list(self.sweep.clusters)
        values, p = [], 1
        while p <= self.arms.k:
            values.append(p)
            p *= 2
        return values


def _is_perfect_power(k: int, d: int) -> bool:
    side = int(round(k ** (1.0 / d)))
    return side ** d == k


def cluster_count_problem(config: ExperimentConfig, p: int) -> Optional[str]:
    """Why p clusters cannot be built under this config, or None"""
    k, d = config.arms.k, config.arms.d
    method = config.partition.method
    if p < 1 or p > k:
        return f"partition.clusters={p} must lie in [1, k={k}]"
    if method is PartitionMethod.GRID:
        if not _is_perfect_power(k, d):
            return f"grid partition needs k^(1/d) integer, got k={k}, d={d}"
        side = int(round(k ** (1.0 / d)))
        valid = [q ** d for q in range(1, side + 1) if side % q == 0]
        if p not in valid:
            return f"grid partition of a {side}^{d} grid cannot use p={p}; valid p: {valid}"
    elif method in (PartitionMethod.SHUFFLED, PartitionMethod.ROUND_ROBIN):
        if k % p != 0:
            return f"{method.value} partition needs p to divide k, got p={p}, k={k}"
    elif method is PartitionMethod.KMEANS:
        if config.environment.kind is not EnvironmentKind.TRACE and not _is_perfect_power(k, d):
            return f"k-means on grid features needs k^(1/d) integer, got k={k}, d={d}"
    return None
