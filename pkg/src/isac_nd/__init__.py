"""Directional-antenna neighbour discovery with radar priors, gossip and Q-learning."""

from .config import ConfigError, ScenarioConfig, load_config
from .engine import RunRecord, simulate
from .policies import ALGORITHMS, get_algorithm

__all__ = [
    "ALGORITHMS",
    "ConfigError",
    "RunRecord",
    "ScenarioConfig",
    "get_algorithm",
    "load_config",
    "simulate",
]

__version__ = "0.1.0"
