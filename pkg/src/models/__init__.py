from .experiment import (
    AlgorithmMode,
    EnvironmentKind,
    ExperimentConfig,
    PartitionMethod,
    RegretKind,
)
from .records import ArmSweepRow, ExperimentSummary, RunRecord, SweepRow, TTestResult

__all__ = [
    "AlgorithmMode",
    "ArmSweepRow",
    "EnvironmentKind",
    "ExperimentConfig",
    "ExperimentSummary",
    "PartitionMethod",
    "RegretKind",
    "RunRecord",
    "SweepRow",
    "TTestResult",
]
