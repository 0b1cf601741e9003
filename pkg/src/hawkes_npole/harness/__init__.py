"""Configuration, experiment drivers and command-line entry point."""

from .config import ConfigError, ExperimentConfig, load_config
from .experiments import RUNNERS

__all__ = ["ConfigError", "ExperimentConfig", "RUNNERS", "load_config"]
