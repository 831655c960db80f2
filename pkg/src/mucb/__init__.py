"""Piecewise-stationary bandits: M-UCB, change detection, baselines and a Monte-Carlo harness."""

from .detect import ChangeDetector, DetectorParams, calibrate_threshold, cd_test
from .env import Environment, RewardFamily, gap_profile, make_piecewise_env, pseudo_regret
from .policies import MUCB, POLICY_NAMES, PolicySpec, make_policy
from .sim import monte_carlo, run_episode
from .tuning import TunedParams, TuningError, check_feasibility, tune

__all__ = [
    "ChangeDetector", "DetectorParams", "calibrate_threshold", "cd_test",
    "Environment", "RewardFamily", "gap_profile", "make_piecewise_env", "pseudo_regret",
    "MUCB", "POLICY_NAMES", "PolicySpec", "make_policy",
    "monte_carlo", "run_episode",
    "TunedParams", "TuningError", "check_feasibility", "tune",
]
