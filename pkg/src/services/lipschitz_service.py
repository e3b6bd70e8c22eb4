"""
Lipschitz Service
Per-arm Lipschitz-constant estimates for a reward surface, with a shuffled-reward reference
"""

from typing import Any, Dict, Tuple

import numpy as np

from src.bandits.core import RngStream
from src.bandits.environments import ArmGrid, traveling_means
from src.bandits.errors import BanditError, ConfigError
from src.bandits.partitioning import lipschitz_estimate
from src.config.logging_config import get_service_logger
from src.models.experiment import EnvironmentKind, ExperimentConfig
from src.services.experiment_service import experiment_service
from src.services.trace_service import trace_service


class LipschitzService:
    """Service for estimating how smooth rewards are over the arm features"""

    def __init__(self):
        self.logger = get_service_logger("lipschitz")

    def surface(self, config: ExperimentConfig) -> Tuple[np.ndarray, np.ndarray]:
        """(features, mean rewards) of the configured arms"""
        env = config.environment
        k, d = config.arms.k, config.arms.d
        if env.kind is EnvironmentKind.TRACE:
            if env.features_path is None:
                raise ConfigError("the Lipschitz estimate of a trace needs environment.features_path")
            trace = experiment_service.load_trace(env.trace_path)
            return trace_service.load_arm_features(env.features_path, k=trace.k), trace.rewards.mean(axis=0)

        if env.features_path is not None:
            features = trace_service.load_arm_features(env.features_path, k=k)
        else:
            features = ArmGrid(k, d).positions
        if env.kind is EnvironmentKind.METRIC:
            grid = ArmGrid(k, d)
            start = grid.center if env.start is None else np.asarray(env.start, dtype=float)
            return features, traveling_means(grid.positions, start)
        environment = experiment_service.build_environment(config, RngStream(config.experiment.seed).derive("env"))
        return features, environment.mean_vector(0)

    def lipschitz_report(self, config: ExperimentConfig) -> Tuple[np.ndarray, Dict[str, Any]]:
        """Per-arm estimates plus the median under seeded reward permutations"""
        neighbors = config.lipschitz.neighbors
        self.logger.log_function_start("lipschitz_report", neighbors=neighbors, shuffles=config.lipschitz.shuffles)
        try:
            features, means = self.surface(config)
            ell = lipschitz_estimate(features, means, neighbors)
            stream = RngStream(config.experiment.seed).derive("lipschitz")
            shuffled_medians = []
            for index in range(config.lipschitz.shuffles):
                order = stream.derive("shuffle", index).permutation(means.size)
                shuffled_medians.append(float(np.median(lipschitz_estimate(features, means[order], neighbors))))
        except BanditError as e:
            self.logger.log_function_error("lipschitz_report", e)
            raise

        median = float(np.median(ell))
        reference = float(np.median(shuffled_medians))
        report = {
            "neighbors": neighbors,
            "median_ell": median,
            "max_ell": float(np.max(ell)),
            "shuffled_median_ell": shuffled_medians,
            "shuffled_reference": reference,
            "ratio_to_shuffled": median / reference if reference > 0 else None,
        }
        self.logger.log_function_success("lipschitz_report", result=ell, median_ell=median, shuffled=reference)
        return ell, report


lipschitz_service = LipschitzService()
