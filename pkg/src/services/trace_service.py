"""
Trace Service
Loads recorded reward traces and arm feature tables from CSV
"""

import re
import time
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from src.bandits.environments import RewardTrace
from src.bandits.errors import TraceFormatError
from src.bandits.partitioning import normalize_features
from src.config.logging_config import get_service_logger

HEADER_LINE = 1
_PARSER_LINE = re.compile(r"line (\d+)")


def _read_table(path: Path, first_column: str) -> pd.DataFrame:
    if not path.is_file():
        raise TraceFormatError("file not found", path=str(path))
    try:
        frame = pd.read_csv(path, dtype=str, skipinitialspace=True)
    except pd.errors.EmptyDataError as e:
        raise TraceFormatError("file is empty", path=str(path), line=HEADER_LINE) from e
    except pd.errors.ParserError as e:
        match = _PARSER_LINE.search(str(e))
        line = int(match.group(1)) if match else None
        raise TraceFormatError(f"malformed row: {e}", path=str(path), line=line) from e
    columns = [c.strip() for c in frame.columns]
    frame.columns = columns
    if not columns or columns[0] != first_column:
        raise TraceFormatError(f"first column must be '{first_column}', got '{columns[0] if columns else ''}'",
                               path=str(path), line=HEADER_LINE)
    if len(columns) < 2:
        raise TraceFormatError("need at least one value column", path=str(path), line=HEADER_LINE)
    return frame


def _numeric(frame: pd.DataFrame, path: Path) -> np.ndarray:
    """Float matrix of the whole table; the first bad cell is reported with its file line"""
    values = frame.apply(pd.to_numeric, errors="coerce")
    bad = values.isna().to_numpy()
    if bad.any():
        row, column = np.argwhere(bad)[0]
        cell = frame.iat[row, column]
        raise TraceFormatError(
            f"column '{frame.columns[column]}' holds non-numeric value {cell!r}",
            path=str(path), line=int(row) + HEADER_LINE + 1,
        )
    return values.to_numpy(dtype=float)


class TraceService:
    """Service for reading reward traces and arm features"""

    def __init__(self):
        self.logger = get_service_logger("trace")

    def load_trace(self, path: Union[str, Path]) -> RewardTrace:
        """CSV ``t,arm_0,...,arm_{k-1}`` with strictly increasing t and rewards in [0, 1]"""
        start_time = time.time()
        path = Path(path)
        self.logger.log_function_start("load_trace", path=str(path))
        try:
            frame = _read_table(path, "t")
            matrix = _numeric(frame, path)
            times, rewards = matrix[:, 0], matrix[:, 1:]
            if times.size < 2:
                raise TraceFormatError("a trace needs at least two sample rows", path=str(path))
            if np.any(times != np.round(times)):
                row = int(np.flatnonzero(times != np.round(times))[0])
                raise TraceFormatError("time stamps must be integers", path=str(path), line=row + 2)
            steps = np.diff(times)
            if np.any(steps <= 0):
                row = int(np.flatnonzero(steps <= 0)[0]) + 1
                raise TraceFormatError("time stamps must be strictly increasing", path=str(path), line=row + 2)
            outside = (rewards < 0) | (rewards > 1)
            if outside.any():
                row, column = np.argwhere(outside)[0]
                raise TraceFormatError(
                    f"reward {rewards[row, column]} of {frame.columns[column + 1]} outside [0, 1]",
                    path=str(path), line=int(row) + 2,
                )
            trace = RewardTrace(times=times.astype(np.int64), rewards=rewards)

            execution_time = (time.time() - start_time) * 1000
            self.logger.log_function_success(
                "load_trace", execution_time=execution_time,
                samples=int(times.size), arms=trace.k, first=trace.first, last=trace.last,
            )
            return trace
        except TraceFormatError as e:
            self.logger.log_function_error("load_trace", e, path=str(path))
            raise

    def load_arm_features(self, path: Union[str, Path], k: Optional[int] = None) -> np.ndarray:
        """CSV ``arm,x_0,...``; rows are reordered by arm and min-max scaled per dimension"""
        path = Path(path)
        self.logger.log_function_start("load_arm_features", path=str(path), k=k)
        try:
            frame = _read_table(path, "arm")
            matrix = _numeric(frame, path)
            arms = matrix[:, 0]
            expected = np.arange(arms.size) if k is None else np.arange(k)
            if arms.size != expected.size or not np.array_equal(np.sort(arms), expected):
                raise TraceFormatError(
                    f"arm column must list each arm 0..{expected.size - 1} exactly once", path=str(path)
                )
            features = matrix[np.argsort(arms, kind="stable"), 1:]
            normalized = normalize_features(features)

            self.logger.log_function_success("load_arm_features", arms=int(arms.size),
                                             dimensions=int(features.shape[1]))
            return normalized
        except TraceFormatError as e:
            self.logger.log_function_error("load_arm_features", e, path=str(path))
            raise


trace_service = TraceService()
