"""
SIGIL Simulator - Result Export
CSV through pandas, JSON summaries tagged with a schema version.
"""

import json
from pathlib import Path
from typing import Any, Dict

import pandas as pd

from .collusion import CollusionResult
from .economy import EconomyResult
from .sweeps import SweepResult

SCHEMA = "sigil-sim/1"


def _prepare(path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_frame(frame: pd.DataFrame, path: Path) -> Path:
    path = _prepare(path)
    frame.to_csv(path, index=False, float_format="%.6f", lineterminator="\n")
    return path


def write_trajectories(result: EconomyResult, path: Path) -> Path:
    return write_frame(result.cohort_trajectories(), path)


def write_collusion(result: CollusionResult, path: Path) -> Path:
    return write_frame(result.to_frame(), path)


def write_sweep(result: SweepResult, path: Path) -> Path:
    return write_frame(result.to_frame(), path)


def write_summary(summary: Dict[str, Any], path: Path) -> Path:
    path = _prepare(path)
    document = {"schema": SCHEMA}
    document.update(summary)
    path.write_text(json.dumps(document, indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8")
    return path
