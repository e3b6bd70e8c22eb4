"""
Partition Service
Builds partitions from an experiment config and moves them to and from CSV
"""

from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from src.bandits.core import RngStream
from src.bandits.environments import ArmGrid
from src.bandits.errors import ConfigError, PartitionError, TraceFormatError
from src.bandits.hierarchy import Partition
from src.bandits.partitioning import (
    grid_partition,
    kmeans_partition,
    round_robin_partition,
    shuffled_partition,
)
from src.config.logging_config import get_service_logger
from src.models.experiment import EnvironmentKind, ExperimentConfig, PartitionMethod
from src.services.trace_service import trace_service


class PartitionService:
    """Service for constructing and persisting arm partitions"""

    def __init__(self):
        self.logger = get_service_logger("partitioning")

    def arm_features(self, config: ExperimentConfig) -> np.ndarray:
        """Feature vectors used for clustering: the features file when given, else grid positions"""
        if config.environment.features_path is not None:
            return trace_service.load_arm_features(config.environment.features_path, k=config.arms.k)
        if config.environment.kind is EnvironmentKind.TRACE:
            raise ConfigError("k-means on a trace needs environment.features_path")
        return ArmGrid(config.arms.k, config.arms.d).positions

    def build_partition(self, config: ExperimentConfig, rng: RngStream, p: Optional[int] = None) -> Partition:
        """Partition of config.arms.k arms into p clusters (partition.clusters by default)"""
        p = config.partition.clusters if p is None else p
        method = config.partition.method
        k, d = config.arms.k, config.arms.d
        try:
            if method is PartitionMethod.GRID:
                return grid_partition(ArmGrid(k, d), p)
            if method is PartitionMethod.KMEANS:
                return kmeans_partition(self.arm_features(config), p, rng)
            if method is PartitionMethod.SHUFFLED:
                return shuffled_partition(k, p, rng)
            if method is PartitionMethod.ROUND_ROBIN:
                return round_robin_partition(k, p)
            partition = self.load_partition(config.partition.path, k)
            if partition.p != p:
                raise PartitionError(f"{config.partition.path} holds {partition.p} clusters, expected {p}")
            return partition
        except (PartitionError, TraceFormatError) as e:
            self.logger.log_function_error("build_partition", e, method=method.value, p=p, k=k)
            raise

    def save_partition(self, partition: Partition, path: Union[str, Path]) -> Path:
        """Write ``arm,cluster`` rows in arm order"""
        path = Path(path)
        frame = pd.DataFrame({"arm": np.arange(partition.k), "cluster": partition.labels()})
        frame.to_csv(path, index=False)
        self.logger.info("Partition saved", path=str(path), clusters=partition.p, arms=partition.k)
        return path

    def load_partition(self, path: Union[str, Path], k: int) -> Partition:
        """Read ``arm,cluster`` rows; cluster ids keep their numeric order"""
        path = Path(path)
        try:
            frame = pd.read_csv(path)
        except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise PartitionError(f"cannot read partition file {path}: {e}") from e
        if list(frame.columns) != ["arm", "cluster"]:
            raise PartitionError(f"{path}: expected columns arm,cluster, got {','.join(map(str, frame.columns))}")
        if frame.isna().any().any() or not all(pd.api.types.is_integer_dtype(frame[c]) for c in frame.columns):
            raise PartitionError(f"{path}: arm and cluster must be integers")
        if frame["arm"].duplicated().any():
            raise PartitionError(f"{path}: arm {int(frame['arm'][frame['arm'].duplicated()].iloc[0])} listed twice")
        clusters = tuple(
            tuple(sorted(group["arm"].astype(int).tolist()))
            for _, group in frame.groupby("cluster", sort=True)
        )
        return Partition(clusters=clusters, k=k)


partition_service = PartitionService()
