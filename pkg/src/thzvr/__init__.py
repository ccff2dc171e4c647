"""Discrete-time simulator of an indoor RIS-assisted terahertz VR network:
geometric blockage, THz channels and rates, latency and QoE accounting,
online learned predictors, and a constrained deep-Q controller that picks
RIS phase configurations."""

from .config import SimConfig, load_config
from .engine import Learners, build_learners, run_episode, run_experiment, run_sweep

__version__ = "0.1.0"

__all__ = [
    "Learners", "SimConfig", "build_learners", "load_config", "run_episode",
    "run_experiment", "run_sweep", "__version__",
]
