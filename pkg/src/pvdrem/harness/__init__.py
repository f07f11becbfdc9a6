"""Scenario runner, metrics and command-line interface."""

from .config import PRESETS, ScenarioConfig, load_config, preset, with_overrides
from .metrics import RunMetrics
from .simulate import SERIES_COLUMNS, RunResult, run
from .sweep import sweep, vary

__all__ = ["PRESETS", "ScenarioConfig", "load_config", "preset", "with_overrides",
           "RunMetrics", "SERIES_COLUMNS", "RunResult", "run", "sweep", "vary"]
