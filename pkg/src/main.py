"""
Command-line entry point for the benchmark
Usage: python -m src.main <run|sweep|sweep-arms|replay|lipschitz|validate> --config FILE
"""

import argparse
import sys
import time
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from src.bandits.errors import BanditError, ConfigError, StatisticsError
from src.config import get_settings
from src.config.experiment_config import (
    load_experiment_config,
    resolved_output_dir,
    resolved_trajectory_rows,
    resolved_workers,
)
from src.config.logging_config import get_service_logger, setup_logging
from src.models.experiment import AlgorithmMode, EnvironmentKind, ExperimentConfig
from src.models.records import ExperimentSummary, RunRecord, TTestResult
from src.services.experiment_service import baseline_config, experiment_service, final_regret
from src.services.lipschitz_service import lipschitz_service
from src.services.output_service import output_service
from src.services.statistics_service import statistics_service

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

COMMANDS = ("run", "sweep", "sweep-arms", "replay", "lipschitz", "validate")

cli_logger = get_service_logger("cli")


def create_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    parser = argparse.ArgumentParser(prog="abob", description=f"{settings.app_name} {settings.app_version}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        sub = subparsers.add_parser(command)
        sub.add_argument("--config", required=True, help="TOML experiment file")
        sub.add_argument("--seed", type=int, default=None, help="Master seed")
        sub.add_argument("--repeats", type=int, default=None, help="Seeded repeats per point")
        sub.add_argument("--workers", type=int, default=None, help="Worker processes")
        sub.add_argument("--out", default=None, help="Output directory")
        sub.add_argument("--log-level", default=None, help="Console log level")
    return parser


def _compare(label_a: str, a: Sequence[float], label_b: str, b: Sequence[float]) -> Optional[TTestResult]:
    try:
        return statistics_service.compare(label_a, a, label_b, b)
    except StatisticsError as e:
        cli_logger.log_function_warning("compare", f"no t-test for {label_a} vs {label_b}: {e}")
        return None


# not echoed: they do not change results
RUN_LOCATION_FIELDS = {"experiment": {"output_dir", "workers"}}


def _summary(command: str, config: ExperimentConfig, started: float, **fields) -> ExperimentSummary:
    return ExperimentSummary(
        command=command,
        experiment=config.experiment.name,
        seed=config.experiment.seed,
        config=config.model_dump(mode="json", exclude=RUN_LOCATION_FIELDS),
        wall_clock_seconds=time.time() - started,
        **fields,
    )


def run_command(command: str, config: ExperimentConfig, out: Path, started: float) -> None:
    """run and replay: seeded repeats, optional flat baseline, trajectory and summary"""
    if command == "replay" and config.environment.kind is not EnvironmentKind.TRACE:
        raise ConfigError("replay needs environment.kind = 'trace'")
    workers = resolved_workers(config)
    kind = config.experiment.regret
    records: List[RunRecord] = experiment_service.run_repeats(config, workers)
    label = "abob" if config.algorithm.kind is AlgorithmMode.ABOB else "flat"
    finals: Dict[str, List[float]] = {label: [final_regret(r, kind) for r in records]}
    comparisons = []

    trajectory = list(records)
    if config.experiment.baseline and config.algorithm.kind is AlgorithmMode.ABOB:
        baseline = experiment_service.run_repeats(baseline_config(config), workers)
        trajectory.extend(baseline)
        finals["flat"] = [final_regret(r, kind) for r in baseline]
        result = _compare("abob", finals["abob"], "flat", finals["flat"])
        if result:
            comparisons.append(result)

    output_service.write_trajectory(trajectory, out / "trajectory.csv", resolved_trajectory_rows(config), kind)
    if records[0].partition is not None:
        output_service.write_partition(records[0], out / "partition.csv")
    output_service.write_summary(
        _summary(command, config, started, final_regrets=finals, comparisons=comparisons,
                 extras={"work": [r.work for r in records]}),
        out / "summary.json",
    )


def sweep_command(config: ExperimentConfig, out: Path, started: float) -> None:
    rows, by_p, skipped = experiment_service.sweep_clusters(
        config, config.sweep_cluster_values(), resolved_workers(config)
    )
    comparisons = []
    if 1 in by_p:
        for p, finals in by_p.items():
            if p != 1:
                result = _compare(f"p={p}", finals, "p=1", by_p[1])
                if result:
                    comparisons.append(result)
    output_service.write_sweep(rows, out / "sweep.csv")
    output_service.write_summary(
        _summary("sweep", config, started, comparisons=comparisons, skipped=skipped,
                 final_regrets={f"p={p}": finals for p, finals in by_p.items()}),
        out / "summary.json",
    )


def sweep_arms_command(config: ExperimentConfig, out: Path, started: float) -> None:
    if not config.sweep.arm_counts:
        raise ConfigError("sweep-arms needs sweep.arm_counts")
    rows, skipped = experiment_service.sweep_arms(config, config.sweep.arm_counts, resolved_workers(config))
    output_service.write_arm_sweep(rows, out / "arms.csv")
    output_service.write_summary(_summary("sweep-arms", config, started, skipped=skipped), out / "summary.json")


def lipschitz_command(config: ExperimentConfig, out: Path, started: float) -> None:
    ell, report = lipschitz_service.lipschitz_report(config)
    output_service.write_lipschitz(ell, out / "lipschitz.csv")
    output_service.write_summary(_summary("lipschitz", config, started, extras=report), out / "summary.json")


def execute(args: argparse.Namespace) -> int:
    started = time.time()
    try:
        config = load_experiment_config(
            args.config, seed=args.seed, repeats=args.repeats, workers=args.workers, output_dir=args.out
        )
        experiment_service.validate(config)
    except ConfigError as e:
        cli_logger.log_function_error(args.command, e, config=args.config)
        return EXIT_CONFIG

    if args.command == "validate":
        cli_logger.success("Configuration valid", config=args.config, experiment=config.experiment.name)
        return EXIT_OK

    try:
        out = output_service.prepare_output_dir(resolved_output_dir(config))
        cli_logger.log_function_start(args.command, config=args.config, out=str(out))
        if args.command in ("run", "replay"):
            run_command(args.command, config, out, started)
        elif args.command == "sweep":
            sweep_command(config, out, started)
        elif args.command == "sweep-arms":
            sweep_arms_command(config, out, started)
        else:
            lipschitz_command(config, out, started)
    except ConfigError as e:
        cli_logger.log_function_error(args.command, e, config=args.config)
        return EXIT_CONFIG
    except (BanditError, OSError) as e:
        cli_logger.log_function_error(args.command, e, config=args.config)
        return EXIT_RUNTIME

    cli_logger.log_function_success(args.command, execution_time=(time.time() - started) * 1000, out=str(out))
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = create_parser().parse_args(argv)
    setup_logging(args.log_level)
    return execute(args)


if __name__ == "__main__":
    sys.exit(main())
