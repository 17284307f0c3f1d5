"""Cooperative D2D spectrum sharing: per-pair energy-efficiency model, a
numpy deep Q-learning agent per candidate link pair, and Kuhn-Munkres
link matching at the base station."""

from .channel import ChannelGains, NoiseModel, compute_gains
from .coopset import CoopSetConfig, CoopSets, cooperative_sets
from .coopshare import (
    ActionGrid,
    ConfigurationError,
    Gammas,
    QosConfig,
    ResourceDecision,
    brute_force_pair_opt,
    build_grid,
    evaluate_grid,
    evaluate_pair,
    feasibility_interval,
    nonconvexity_probe,
)
from .dqn import QNetwork, TrainConfig, greedy_decision, train_agent
from .harness import ExperimentSetup, RunResult, SchemeKind, monte_carlo, run_scheme, single_pair_study
from .matching import Matching, brute_force_match, km_match, system_wsee
from .topology import CellScenario, GeometryError, fixed_line_scenario, sample_scenario

__version__ = "0.1.0"

__all__ = [
    "ActionGrid",
    "CellScenario",
    "ChannelGains",
    "ConfigurationError",
    "CoopSetConfig",
    "CoopSets",
    "ExperimentSetup",
    "Gammas",
    "GeometryError",
    "Matching",
    "NoiseModel",
    "QNetwork",
    "QosConfig",
    "ResourceDecision",
    "RunResult",
    "SchemeKind",
    "TrainConfig",
    "brute_force_match",
    "brute_force_pair_opt",
    "build_grid",
    "compute_gains",
    "cooperative_sets",
    "evaluate_grid",
    "evaluate_pair",
    "feasibility_interval",
    "fixed_line_scenario",
    "greedy_decision",
    "km_match",
    "monte_carlo",
    "nonconvexity_probe",
    "run_scheme",
    "sample_scenario",
    "single_pair_study",
    "system_wsee",
    "train_agent",
]
