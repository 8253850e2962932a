from .noise import NoiseModel
from .runner import ALGORITHMS, SolverConfig, Trajectory, resolve_steps, run_solver, run_step_decay
from .schedules import StepDecaySchedule, one_step_coefficient
from .steps import (
    AdaptiveState,
    DerivativeFreeConfig,
    agm_step,
    agm_update,
    dfo_step,
    dfo_update,
    init_adaptive_state,
    online_ls_update,
    repeated_gradient_step,
    retrain_step,
    rsgm_step,
    sgm_nash_step,
    sphere_sample,
)
