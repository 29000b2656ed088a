"""Blind channel estimation laboratory for SISO-OFDM."""

from .channel import ChannelPdp, NoiseModel, draw_channel, transmit_stream
from .constellation import build_constellation, constellation_from_name, split_constellation
from .errors import ConfigurationError, EstimatorFailure, MappingError, SplittingError
from .estimators import precoding_estimate, subspace_estimate
from .harness import SimConfig, SweepSpec, load_config, run_point, run_sweep
from .kernels import BACKEND
from .mpd import MpdConfig, hybrid_blind_estimate
from .ofdm import OfdmConfig
from .precoding import build_precoder

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ChannelPdp", "ConfigurationError", "EstimatorFailure", "MappingError", "MpdConfig",
    "NoiseModel", "OfdmConfig", "SimConfig", "SplittingError", "SweepSpec", "build_constellation",
    "build_precoder", "constellation_from_name", "draw_channel", "hybrid_blind_estimate",
    "load_config", "precoding_estimate", "run_point", "run_sweep", "split_constellation",
    "subspace_estimate", "transmit_stream",
]
