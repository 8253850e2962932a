"""Multiplayer performative prediction: games whose data react to every player's decision."""

from .errors import AssumptionViolation, InnerSolveFailure, NoCertifiedSolution
from .game import (
    GameConstants,
    GameDims,
    GameInstance,
    compute_constants,
    h_map,
    loss_grad_x,
    loss_grad_z,
    loss_value,
    performative_grad_map,
    project,
    sample_distribution,
    static_grad_map,
)
from .io import GameFileError, game_from_dict, game_to_dict, load_game, save_game
from .losses import QuadraticCustom, Revenue, StrategicPrediction
from .distributions import Deterministic, Empirical, FeatureBase, Gaussian
from .oracles import (
    EquilibriumReport,
    MonotonicityCertificate,
    certify_monotone,
    solve,
    solve_nash,
    solve_perf_stable,
    solve_social_opt,
)
from .sets import Ball, Box, ProductSet, WholeSpace
from .solvers import NoiseModel, SolverConfig, StepDecaySchedule, Trajectory, run_solver

__version__ = "0.1.0"
