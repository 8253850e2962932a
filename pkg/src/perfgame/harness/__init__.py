from .artifacts import aggregate_errors, emit_artifacts, read_aggregate_csv, read_trajectory_csv
from .efficiency import EfficiencyReport, efficiency_report
from .experiment import EXPERIMENT_SCHEMA, ExperimentConfig, ExperimentResult, run_experiment
from .myopic import FULL, MODES, MYOPIC, PARTIAL, myopic_gradient, myopic_study
from .rideshare import RideShareInstance, gen_rideshare

__all__ = [
    "EXPERIMENT_SCHEMA",
    "EfficiencyReport",
    "ExperimentConfig",
    "ExperimentResult",
    "FULL",
    "MODES",
    "MYOPIC",
    "PARTIAL",
    "RideShareInstance",
    "aggregate_errors",
    "efficiency_report",
    "emit_artifacts",
    "gen_rideshare",
    "myopic_gradient",
    "myopic_study",
    "read_aggregate_csv",
    "read_trajectory_csv",
    "run_experiment",
]
