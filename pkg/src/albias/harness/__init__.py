"""Experiment orchestration: configs, presets, batch runner, outputs and CLI."""

from .config import ExperimentConfig, load_config, parse_config_text, save_config
from .outputs import write_outputs
from .presets import PRESET_NAMES, preset
from .runner import (BatchSummary, ReplicationResult, RiskTrajectory, compile_experiment,
                     linear_design_sequence, run_batch, run_replication, summarize)

__all__ = [
    "BatchSummary", "ExperimentConfig", "PRESET_NAMES", "ReplicationResult", "RiskTrajectory",
    "compile_experiment", "linear_design_sequence", "load_config", "parse_config_text", "preset",
    "run_batch", "run_replication", "save_config", "summarize", "write_outputs",
]
