"""
Experiment configuration loading
Reads a TOML experiment file, applies CLI overrides and validates it into ExperimentConfig
"""

import sys
from pathlib import Path
from typing import Any, Dict, Optional, Union

from pydantic import ValidationError

from src.bandits.errors import ConfigError
from src.config.settings import get_settings
from src.models.experiment import ExperimentConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


def _format_validation_error(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        location = ".".join(str(piece) for piece in item["loc"]) or "config"
        parts.append(f"{location}: {item['msg']}")
    return "; ".join(parts)


def read_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Parse a TOML file into a plain dict"""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        with path.open("rb") as handle:
            return tomllib.load(handle)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}") from e


def parse_config(raw: Dict[str, Any], source: str = "<config>") -> ExperimentConfig:
    """Validate a raw mapping; unknown keys and cross-field conflicts raise ConfigError"""
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"{source}: {_format_validation_error(e)}") from e


def apply_overrides(
    config: ExperimentConfig,
    seed: Optional[int] = None,
    repeats: Optional[int] = None,
    workers: Optional[int] = None,
    output_dir: Optional[str] = None,
) -> ExperimentConfig:
    """Return a revalidated copy with the CLI flags applied"""
    raw = config.model_dump(mode="json")
    overrides = {"seed": seed, "repeats": repeats, "workers": workers, "output_dir": output_dir}
    for key, value in overrides.items():
        if value is not None:
            raw["experiment"][key] = value
    return parse_config(raw, source="command line")


def load_experiment_config(path: Union[str, Path], **overrides) -> ExperimentConfig:
    config = parse_config(read_config_file(path), source=str(path))
    if any(value is not None for value in overrides.values()):
        config = apply_overrides(config, **overrides)
    return config


def resolved_workers(config: ExperimentConfig) -> int:
    return config.experiment.workers or get_settings().workers


def resolved_output_dir(config: ExperimentConfig) -> Path:
    return Path(config.experiment.output_dir or get_settings().output_dir)


def resolved_trajectory_rows(config: ExperimentConfig) -> int:
    return config.experiment.trajectory_max_rows or get_settings().trajectory_max_rows
