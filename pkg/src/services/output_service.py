"""
Output Service
Writes trajectory, sweep, arm-sweep, Lipschitz and summary files
"""

import math
import tempfile
from pathlib import Path
from typing import Iterable, List, Sequence, Union

import numpy as np
import pandas as pd

from src.bandits.errors import OutputPathError
from src.config.logging_config import get_service_logger
from src.models.experiment import RegretKind
from src.models.records import ArmSweepRow, ExperimentSummary, RunRecord, SweepRow
from src.services.experiment_service import cumulative_regret
from src.services.partition_service import partition_service

TRAJECTORY_COLUMNS = ["run_id", "t", "cluster", "arm", "reward", "cum_regret"]
SWEEP_COLUMNS = ["p", "mean_regret", "std_regret", "repeats"]
ARM_SWEEP_COLUMNS = ["k", "p", "abob_mean", "flat_mean", "ratio"]


def trajectory_indices(horizon: int, max_rows: int) -> np.ndarray:
    """Stride-uniform step indices starting at 0, always ending at horizon - 1"""
    if horizon < 1:
        return np.empty(0, dtype=np.int64)
    if max_rows < 2:
        raise ValueError(f"max_rows must be >= 2, got {max_rows}")
    if horizon <= max_rows:
        return np.arange(horizon)
    stride = math.ceil((horizon - 1) / (max_rows - 1))
    indices = np.arange(0, horizon, stride)
    if indices[-1] != horizon - 1:
        indices = np.append(indices, horizon - 1)
    return indices


class OutputService:
    """Service for writing experiment result files"""

    def __init__(self):
        self.logger = get_service_logger("output")

    def prepare_output_dir(self, path: Union[str, Path]) -> Path:
        """Create the directory and prove it is writable before any run starts"""
        path = Path(path)
        try:
            path.mkdir(parents=True, exist_ok=True)
            with tempfile.NamedTemporaryFile(dir=path, prefix=".write-check-"):
                pass
        except OSError as e:
            error = OutputPathError(f"output directory {path} is not writable: {e}")
            self.logger.log_function_error("prepare_output_dir", error, path=str(path))
            raise error from e
        return path

    def trajectory_frame(
        self, records: Iterable[RunRecord], max_rows: int, kind: RegretKind = RegretKind.PSEUDO
    ) -> pd.DataFrame:
        frames = []
        for record in records:
            regret = cumulative_regret(record, kind=kind)
            indices = trajectory_indices(record.horizon, max_rows)
            frames.append(pd.DataFrame({
                "run_id": record.run_id,
                "t": indices + 1,
                "cluster": record.clusters[indices],
                "arm": record.arms[indices],
                "reward": record.rewards[indices],
                "cum_regret": regret[indices],
            }))
        if not frames:
            return pd.DataFrame(columns=TRAJECTORY_COLUMNS)
        return pd.concat(frames, ignore_index=True)[TRAJECTORY_COLUMNS]

    def write_trajectory(
        self, records: Sequence[RunRecord], path: Union[str, Path], max_rows: int,
        kind: RegretKind = RegretKind.PSEUDO,
    ) -> Path:
        frame = self.trajectory_frame(records, max_rows, kind)
        return self._write_csv(frame, path, "write_trajectory")

    def write_sweep(self, rows: List[SweepRow], path: Union[str, Path]) -> Path:
        frame = pd.DataFrame([row.model_dump() for row in rows], columns=SWEEP_COLUMNS)
        return self._write_csv(frame, path, "write_sweep")

    def write_arm_sweep(self, rows: List[ArmSweepRow], path: Union[str, Path]) -> Path:
        frame = pd.DataFrame([row.model_dump() for row in rows], columns=ARM_SWEEP_COLUMNS)
        return self._write_csv(frame, path, "write_arm_sweep")

    def write_lipschitz(self, ell: np.ndarray, path: Union[str, Path]) -> Path:
        frame = pd.DataFrame({"arm": np.arange(len(ell)), "ell": np.asarray(ell, dtype=float)})
        return self._write_csv(frame, path, "write_lipschitz")

    def write_partition(self, record: RunRecord, path: Union[str, Path]) -> Path:
        if record.partition is None:
            raise OutputPathError(f"{record.run_id} is a flat run and has no partition")
        return partition_service.save_partition(record.partition, path)

    def write_summary(self, summary: ExperimentSummary, path: Union[str, Path]) -> Path:
        path = Path(path)
        try:
            path.write_text(summary.model_dump_json(indent=2), encoding="utf-8")
        except OSError as e:
            self.logger.log_function_error("write_summary", e, path=str(path))
            raise OutputPathError(f"cannot write {path}: {e}") from e
        self.logger.info("Summary written", path=str(path), command=summary.command)
        return path

    def _write_csv(self, frame: pd.DataFrame, path: Union[str, Path], function_name: str) -> Path:
        path = Path(path)
        try:
            frame.to_csv(path, index=False)
        except OSError as e:
            self.logger.log_function_error(function_name, e, path=str(path))
            raise OutputPathError(f"cannot write {path}: {e}") from e
        self.logger.log_function_success(function_name, rows=len(frame), path=str(path))
        return path


output_service = OutputService()
