"""
Shared fixtures: file logging off, TOML config writer, small trace files
"""

import os

os.environ.setdefault("ABOB_LOG_TO_FILE", "false")

from pathlib import Path  # noqa: E402
from typing import Any, Dict  # noqa: E402

import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
import pytest  # noqa: E402

from src.config.settings import get_settings  # noqa: E402

get_settings.cache_clear()


def _toml_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    return repr(value)


def toml_text(sections: Dict[str, Dict[str, Any]]) -> str:
    lines = []
    for name, values in sections.items():
        lines.append(f"[{name}]")
        lines.extend(f"{key} = {_toml_value(value)}" for key, value in values.items())
        lines.append("")
    return "\n".join(lines)


def small_sections(**overrides: Dict[str, Any]) -> Dict[str, Dict[str, Any]]:
    """A fast stochastic-gap experiment; overrides replace whole keys per section"""
    sections = {
        "experiment": {"name": "small", "horizon": 200, "repeats": 2, "seed": 11, "workers": 1},
        "arms": {"k": 16, "d": 1},
        "environment": {"kind": "stochastic_gap", "delta": 0.2},
        "algorithm": {"kind": "abob", "parent": "tsallis_inf", "child": "tsallis_inf", "policy": "tsallis_inf"},
        "partition": {"method": "grid", "clusters": 4},
    }
    for section, values in overrides.items():
        sections.setdefault(section, {}).update(values)
    return sections


@pytest.fixture
def write_config(tmp_path: Path):
    """Write sections to a TOML file and return its path"""
    counter = {"n": 0}

    def _write(sections: Dict[str, Dict[str, Any]]) -> Path:
        counter["n"] += 1
        path = tmp_path / f"config_{counter['n']}.toml"
        path.write_text(toml_text(sections), encoding="utf-8")
        return path

    return _write


@pytest.fixture
def trace_file(tmp_path: Path) -> Path:
    """4 arms sampled every 10 steps over t = 0..300 with drifting rewards"""
    times = np.arange(0, 301, 10)
    phase = times / 300.0
    frame = pd.DataFrame({
        "t": times,
        "arm_0": 0.2 + 0.6 * phase,
        "arm_1": 0.8 - 0.6 * phase,
        "arm_2": np.full(times.size, 0.5),
        "arm_3": 0.5 + 0.3 * np.sin(6 * phase),
    })
    path = tmp_path / "trace.csv"
    frame.to_csv(path, index=False)
    return path


@pytest.fixture
def features_file(tmp_path: Path) -> Path:
    frame = pd.DataFrame({"arm": [0, 1, 2, 3], "x_0": [10.0, 20.0, 30.0, 40.0], "x_1": [1.0, 1.0, 3.0, 2.0]})
    path = tmp_path / "features.csv"
    frame.to_csv(path, index=False)
    return path
