from .spectral import ChannelSpectrum
from .control import NullController
from .experiment import StokesExperiment, run_experiment
from .config import ExperimentConfig, load_config


__all__ = ["ChannelSpectrum",
           "NullController",
           "StokesExperiment",
           "run_experiment",
           "ExperimentConfig",
           "load_config"]

name = "stokesnc"
