"""Experiment orchestration: config, runs, aggregation and artifacts."""

from .config import FULL_SCALE_AGENT_STEPS, ExperimentConfig
from .report import SCATTER_HEADER, emit_report, write_trajectory_csv
from .runner import ExperimentResult, agent_steps, build_instance, enumerate_coalitions, run_experiment

__all__ = [
    "FULL_SCALE_AGENT_STEPS",
    "SCATTER_HEADER",
    "ExperimentConfig",
    "ExperimentResult",
    "agent_steps",
    "build_instance",
    "emit_report",
    "enumerate_coalitions",
    "run_experiment",
    "write_trajectory_csv",
]
