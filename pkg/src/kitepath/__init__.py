"""Power-maximizing Lissajous reference paths for pumping-kite traction phases."""

from .config import RunConfig, parse_config
from .geometry import LissajousPath, curvature, embed_3d, eval_path, heading, path_derivatives, sample_path
from .model import (
    Environment,
    KiteParams,
    KiteState,
    average_power,
    instantaneous_power,
    lambda_ratio,
    loyd_power,
    optimal_power,
    reel_out_optimum,
    roll_angle,
    tether_force,
)
from .optimizer import PlanProblem, PlanSolution, beta_limits, build_problem, evaluate, kappa_limit, multi_start, solve
from .sweep import ParamSplines, SweepResult, fit_splines, phase_average, run_sweep

__version__ = "0.1.0"
