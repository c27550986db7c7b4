"""End-to-end federated runs: configuration, toy data, rounds and reports."""

from .config import STRATEGIES, ExperimentConfig, ProfileSpec, default_profiles, load_config
from .data import ToyTask, cluster_shares, make_toy_task, partition_noniid
from .runner import Experiment, RoundReport, run_experiment, write_reports

__all__ = [
    "STRATEGIES",
    "Experiment",
    "ExperimentConfig",
    "ProfileSpec",
    "RoundReport",
    "ToyTask",
    "cluster_shares",
    "default_profiles",
    "load_config",
    "make_toy_task",
    "partition_noniid",
    "run_experiment",
    "write_reports",
]
