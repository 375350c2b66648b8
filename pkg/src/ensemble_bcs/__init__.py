"""Ensemble QUBO-based recovery of sparse binary signals."""

from .model import BcsInstance, DimensionError, objective, recovery_error, sparsity
from .qubo import Qubo, build_qubo, energy, qubo_offset, rescaled
from .samplers import (
    CapacityError,
    ExactSampler,
    Sample,
    SampleSet,
    SaConfig,
    SimulatedAnnealingSampler,
    descend,
    solve_exact,
    solve_sa,
)

__version__ = "0.1.0"
