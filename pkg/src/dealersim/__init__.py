"""Dealer-market simulation with RL liquidity providers and takers."""

__version__ = "0.1.0"

from .env import DealerMarketEnv, EnvConfig
from .ecnmodel import EcnModel, build_default_model, calibrate
from .experiments import ExperimentSpec, run_experiment
from .ppo import PolicyBundle, TrainerConfig, train

__all__ = [
    "DealerMarketEnv",
    "EnvConfig",
    "EcnModel",
    "ExperimentSpec",
    "PolicyBundle",
    "TrainerConfig",
    "build_default_model",
    "calibrate",
    "run_experiment",
    "train",
]
