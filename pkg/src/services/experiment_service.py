"""
Experiment Service
Builds environments and agents from a config, runs seeded repeats, computes regret and
drives the cluster-count and arm-count sweeps
"""

import math
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.bandits.core import RngStream
from src.bandits.environments import (
    ArmGrid,
    ClusteredGapEnvironment,
    Environment,
    MetricEnvironment,
    PhasedAdversarialEnvironment,
    RewardTrace,
    StochasticGapEnvironment,
    TraceEnvironment,
)
from src.bandits.errors import BanditError, ConfigError, DataError
from src.bandits.hierarchy import AbobAgent, FlatAgent
from src.bandits.partitioning import valid_grid_cluster_counts
from src.config.logging_config import get_service_logger
from src.models.experiment import (
    AlgorithmMode,
    EnvironmentKind,
    ExperimentConfig,
    PartitionMethod,
    RegretKind,
    cluster_count_problem,
)
from src.models.records import ArmSweepRow, RunRecord, SweepRow
from src.services.partition_service import partition_service
from src.services.statistics_service import mean_and_std
from src.services.trace_service import trace_service

CONSISTENCY_TOLERANCE = 1e-9


def regret_from_means(arms: Sequence[int], mean_matrix: np.ndarray) -> np.ndarray:
    """Regret series against the best fixed arm in hindsight from a full T x k mean matrix"""
    means = np.asarray(mean_matrix, dtype=float)
    arms = np.asarray(arms, dtype=np.int64)
    if means.ndim != 2 or means.shape[0] != arms.size:
        raise DataError(f"mean matrix shape {means.shape} does not match {arms.size} plays")
    if not np.all(np.isfinite(means)):
        raise DataError("mean matrix has missing values")
    best = np.cumsum(means, axis=0).max(axis=1)
    chosen = means[np.arange(arms.size), arms]
    return best - np.cumsum(chosen)


def cumulative_regret(
    record: RunRecord,
    mean_totals: Optional[np.ndarray] = None,
    kind: RegretKind = RegretKind.PSEUDO,
) -> np.ndarray:
    """r(tau) = max_a sum_{t<=tau} c_t(a) - sum_{t<=tau} c_t(a_t).

    Pseudo regret reads the environment means; realized regret the drawn reward vectors.
    ``mean_totals`` (per-arm totals over the run) is checked against the final best prefix.
    """
    if RegretKind(kind) is RegretKind.PSEUDO:
        best, chosen, totals = record.best_prefix, record.chosen_means, record.mean_totals
    else:
        best, chosen, totals = record.best_prefix_realized, record.rewards, record.reward_totals
    if best is None or chosen is None or best.size == 0 or best.shape != chosen.shape:
        raise DataError(f"{record.run_id}: per-step means are missing")
    if not (np.all(np.isfinite(best)) and np.all(np.isfinite(chosen))):
        raise DataError(f"{record.run_id}: per-step means contain missing values")
    totals = totals if mean_totals is None else np.asarray(mean_totals, dtype=float)
    if totals is not None and totals.size:
        if abs(float(totals.max()) - float(best[-1])) > CONSISTENCY_TOLERANCE * max(1.0, abs(float(best[-1]))):
            raise DataError(f"{record.run_id}: arm totals disagree with the best-arm prefix")
    return best - np.cumsum(chosen)


def final_regret(record: RunRecord, kind: RegretKind = RegretKind.PSEUDO) -> float:
    return float(cumulative_regret(record, kind=kind)[-1])


def derive_config(config: ExperimentConfig, **sections: Dict[str, Any]) -> ExperimentConfig:
    """Copy with per-section field updates; callers check compatibility themselves"""
    updates = {name: getattr(config, name).model_copy(update=values) for name, values in sections.items()}
    return config.model_copy(update=updates)


def baseline_config(config: ExperimentConfig) -> ExperimentConfig:
    """The flat run of the hierarchy's child algorithm"""
    return derive_config(config, algorithm={"kind": AlgorithmMode.FLAT, "policy": config.algorithm.child})


def clusters_config(config: ExperimentConfig, p: int) -> ExperimentConfig:
    return derive_config(config, algorithm={"kind": AlgorithmMode.ABOB}, partition={"clusters": p})


def run_label(config: ExperimentConfig, repeat_index: int) -> str:
    name = config.experiment.name
    if config.algorithm.kind is AlgorithmMode.FLAT:
        return f"{name}-flat-{config.algorithm.policy.value}-r{repeat_index}"
    return f"{name}-abob-p{config.partition.clusters}-r{repeat_index}"


def _run_task(task: Tuple[ExperimentConfig, int]) -> RunRecord:
    config, repeat_index = task
    return experiment_service.run_once(config, repeat_index)


def _final_regret_task(task: Tuple[ExperimentConfig, int]) -> float:
    config, repeat_index = task
    record = experiment_service.run_once(config, repeat_index)
    return final_regret(record, config.experiment.regret)


class ExperimentService:
    """Service for running seeded bandit experiments"""

    def __init__(self):
        self.logger = get_service_logger("experiment")
        self._traces: Dict[str, RewardTrace] = {}

    def load_trace(self, path: str) -> RewardTrace:
        if path not in self._traces:
            self._traces[path] = trace_service.load_trace(path)
        return self._traces[path]

    def build_environment(self, config: ExperimentConfig, rng: RngStream) -> Environment:
        env = config.environment
        k, d = config.arms.k, config.arms.d
        options = {"reward_kind": env.effective_reward_kind, "reward_width": env.reward_width}
        if env.kind is EnvironmentKind.STOCHASTIC_GAP:
            return StochasticGapEnvironment(k, env.delta, rng, best=env.best_arm, **options)
        if env.kind is EnvironmentKind.PHASED_ADVERSARIAL:
            return PhasedAdversarialEnvironment(
                k, env.delta, rng, best=env.best_arm, base_phase=env.base_phase, **options
            )
        if env.kind is EnvironmentKind.METRIC:
            start = None if env.start is None else np.asarray(env.start, dtype=float)
            return MetricEnvironment(ArmGrid(k, d), rng, sigma=env.sigma, start=start, **options)
        if env.kind is EnvironmentKind.CLUSTERED_GAP:
            return ClusteredGapEnvironment(
                env.clusters, env.arms_per_cluster, env.between_gap, env.within_gap, env.top_mean, rng, **options
            )
        trace = self.load_trace(env.trace_path)
        if trace.k != k:
            raise ConfigError(f"trace {env.trace_path} has {trace.k} arms, arms.k is {k}")
        if trace.last - trace.first < config.experiment.horizon - 1:
            raise ConfigError(
                f"trace {env.trace_path} covers {trace.last - trace.first + 1} steps, "
                f"horizon is {config.experiment.horizon}"
            )
        return TraceEnvironment(trace, rng, **options)

    def build_agent(self, config: ExperimentConfig, run_stream: RngStream):
        """Agent and partition (None for flat runs) drawing from the run's stream"""
        algorithm = config.algorithm
        horizon = config.experiment.horizon
        if algorithm.kind is AlgorithmMode.FLAT:
            agent = FlatAgent(
                algorithm.policy, config.arms.k, horizon, run_stream,
                ucb_alpha=algorithm.ucb_alpha, tsallis_eta_scale=algorithm.tsallis_eta_scale,
            )
            return agent, None
        partition = partition_service.build_partition(config, run_stream.derive("partition"))
        agent = AbobAgent(
            partition, algorithm.parent, algorithm.child, horizon, run_stream,
            ucb_alpha=algorithm.ucb_alpha, tsallis_eta_scale=algorithm.tsallis_eta_scale,
        )
        return agent, partition

    def validate(self, config: ExperimentConfig) -> None:
        """Build the repeat-0 environment and agent once; any failure is a ConfigError"""
        self.logger.log_function_start("validate", experiment=config.experiment.name)
        try:
            run_stream = RngStream(config.experiment.seed).derive("run", 0)
            environment = self.build_environment(config, run_stream.derive("env"))
            environment.begin_round(0)
            self.build_agent(config, run_stream)
        except ConfigError as e:
            self.logger.log_function_error("validate", e)
            raise
        except BanditError as e:
            self.logger.log_function_error("validate", e)
            raise ConfigError(f"{config.experiment.name}: {e}") from e
        self.logger.log_function_success("validate", experiment=config.experiment.name)

    def run_once(self, config: ExperimentConfig, repeat_index: int) -> RunRecord:
        """One seeded run; identical (seed, repeat_index) give identical records"""
        start_time = time.time()
        run_id = run_label(config, repeat_index)
        self.logger.log_function_start("run_once", run_id=run_id, horizon=config.experiment.horizon)
        try:
            run_stream = RngStream(config.experiment.seed).derive("run", repeat_index)
            environment = self.build_environment(config, run_stream.derive("env"))
            agent, partition = self.build_agent(config, run_stream)

            horizon, k = config.experiment.horizon, config.arms.k
            clusters = np.empty(horizon, dtype=np.int64)
            arms = np.empty(horizon, dtype=np.int64)
            rewards = np.empty(horizon)
            chosen_means = np.empty(horizon)
            best_prefix = np.empty(horizon)
            best_prefix_realized = np.empty(horizon)
            mean_totals = np.zeros(k)
            reward_totals = np.zeros(k)

            for t in range(horizon):
                outcome = environment.begin_round(t)
                cluster, arm, reward = agent.step(environment)
                mean_totals += outcome.means
                reward_totals += outcome.rewards
                clusters[t] = cluster
                arms[t] = arm
                rewards[t] = reward
                chosen_means[t] = outcome.means[arm]
                best_prefix[t] = mean_totals.max()
                best_prefix_realized[t] = reward_totals.max()

            work = agent.work() if partition is not None else agent.policy.work
            record = RunRecord(
                run_id=run_id,
                repeat=repeat_index,
                p=None if partition is None else partition.p,
                clusters=clusters,
                arms=arms,
                rewards=rewards,
                chosen_means=chosen_means,
                best_prefix=best_prefix,
                best_prefix_realized=best_prefix_realized,
                mean_totals=mean_totals,
                reward_totals=reward_totals,
                work=work,
                execution_time_ms=(time.time() - start_time) * 1000,
                partition=partition,
            )
            self.logger.log_function_success(
                "run_once", execution_time=record.execution_time_ms, run_id=run_id,
                final_regret=final_regret(record, config.experiment.regret),
            )
            return record
        except BanditError as e:
            self.logger.log_function_error("run_once", e, run_id=run_id, experiment=config.experiment.name)
            raise type(e)(f"{run_id}: {e}") from e

    def _execute(self, function: Callable, tasks: List[Tuple[ExperimentConfig, int]], workers: int) -> List[Any]:
        """Map tasks in order; results do not depend on the worker count"""
        if workers <= 1 or len(tasks) <= 1:
            return [function(task) for task in tasks]
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            return list(pool.map(function, tasks))

    def run_repeats(self, config: ExperimentConfig, workers: int = 1) -> List[RunRecord]:
        tasks = [(config, r) for r in range(config.experiment.repeats)]
        return self._execute(_run_task, tasks, workers)

    def final_regrets(self, config: ExperimentConfig, workers: int = 1) -> List[float]:
        tasks = [(config, r) for r in range(config.experiment.repeats)]
        return self._execute(_final_regret_task, tasks, workers)

    def sweep_clusters(
        self, config: ExperimentConfig, p_values: Sequence[int], workers: int = 1
    ) -> Tuple[List[SweepRow], Dict[int, List[float]], List[str]]:
        """Final regret per (p, repeat); invalid p values are skipped with a warning.

        Every p shares the repeat streams derive("run", r).
        """
        start_time = time.time()
        self.logger.log_function_start("sweep_clusters", p_values=list(p_values), repeats=config.experiment.repeats)
        valid: List[int] = []
        skipped: List[str] = []
        for p in p_values:
            problem = cluster_count_problem(config, p)
            if problem:
                self.logger.log_function_warning("sweep_clusters", f"skipping p={p}: {problem}")
                skipped.append(f"p={p}: {problem}")
            else:
                valid.append(p)

        points = sorted(set(valid))
        repeats = config.experiment.repeats
        tasks = [(clusters_config(config, p), r) for p in points for r in range(repeats)]
        finals = self._execute(_final_regret_task, tasks, workers)
        by_p = {p: finals[i * repeats:(i + 1) * repeats] for i, p in enumerate(points)}

        rows = []
        for p in valid:
            mean, std = mean_and_std(by_p[p])
            rows.append(SweepRow(p=p, mean_regret=mean, std_regret=std, repeats=repeats))

        self.logger.log_function_success(
            "sweep_clusters", result=rows, execution_time=(time.time() - start_time) * 1000, skipped=len(skipped)
        )
        return rows, by_p, skipped

    def arm_sweep_clusters(self, config: ExperimentConfig, k: int) -> int:
        """Largest grid cluster count not above sqrt(k)"""
        grid = ArmGrid(k, config.arms.d)
        return max(q for q in valid_grid_cluster_counts(grid) if q <= math.sqrt(k))

    def sweep_arms(
        self, config: ExperimentConfig, k_values: Sequence[int], workers: int = 1
    ) -> Tuple[List[ArmSweepRow], List[str]]:
        """Hierarchical against flat final regret as the arm count grows"""
        if config.environment.kind not in (
            EnvironmentKind.STOCHASTIC_GAP, EnvironmentKind.PHASED_ADVERSARIAL, EnvironmentKind.METRIC
        ):
            raise ConfigError(f"arm-count sweep does not support environment '{config.environment.kind.value}'")
        if config.partition.method is not PartitionMethod.GRID:
            raise ConfigError("arm-count sweep uses grid partitions")

        start_time = time.time()
        self.logger.log_function_start("sweep_arms", k_values=list(k_values))
        rows: List[ArmSweepRow] = []
        skipped: List[str] = []
        for k in k_values:
            try:
                sized = derive_config(config, arms={"k": k})
                if config.environment.best_arm >= k:
                    raise ConfigError(f"best_arm={config.environment.best_arm} needs more than {k} arms")
                p = self.arm_sweep_clusters(sized, k)
                hierarchical = clusters_config(sized, p)
                self.validate(hierarchical)
            except BanditError as e:
                self.logger.log_function_warning("sweep_arms", f"skipping k={k}: {e}")
                skipped.append(f"k={k}: {e}")
                continue
            abob_mean, _ = mean_and_std(self.final_regrets(hierarchical, workers))
            flat_mean, _ = mean_and_std(self.final_regrets(baseline_config(sized), workers))
            ratio = abob_mean / flat_mean if flat_mean != 0 else float("nan")
            rows.append(ArmSweepRow(k=k, p=p, abob_mean=abob_mean, flat_mean=flat_mean, ratio=ratio))

        self.logger.log_function_success(
            "sweep_arms", result=rows, execution_time=(time.time() - start_time) * 1000
        )
        return rows, skipped


experiment_service = ExperimentService()
