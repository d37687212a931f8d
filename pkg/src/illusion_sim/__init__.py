"""Simulator for scaling probabilistic (p-bit) computers across partitioned chips."""

__version__ = "0.1.0"

from .errors import CapacityError, ContractViolation, IllusionSimError, ParseError
from .model import (
    ExactDistribution,
    IsingModel,
    energy,
    exact_boltzmann,
    grid_model,
    ground_states,
    local_field,
    calibration_model,
    random_model,
)
from .partition import PartitionResult, PartitionSpec, brute_force_min_cut, cut_weight, partition
from .sampler import BetaSchedule, Kernel, SamplerConfig, SampleTrace, greedy_coloring, run
from .illusion import (
    ChipConfig,
    IllusionSystem,
    InterconnectConfig,
    Mode,
    RunReport,
    account,
    async_run,
    build_system,
    ideal_reference_run,
    sync_run,
)
from .metrics import autocorrelation_time, kl_divergence, tv_distance
from .formats import load_model, qubo_to_ising, save_model

__all__ = [
    "BetaSchedule", "CapacityError", "calibration_model", "ChipConfig", "ContractViolation", "ExactDistribution",
    "IllusionSimError", "IllusionSystem", "InterconnectConfig", "IsingModel", "Kernel", "Mode",
    "ParseError", "PartitionResult", "PartitionSpec", "RunReport", "SampleTrace", "SamplerConfig",
    "account", "async_run", "autocorrelation_time", "brute_force_min_cut", "build_system",
    "cut_weight", "energy", "exact_boltzmann", "greedy_coloring", "grid_model", "ground_states",
    "ideal_reference_run", "kl_divergence", "load_model", "local_field", "partition",
    "qubo_to_ising", "random_model", "run", "save_model", "sync_run", "tv_distance",
]
