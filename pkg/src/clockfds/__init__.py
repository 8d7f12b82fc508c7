"""Tensor-network toolkit for field-digitization scaling of the 2D N-state clock model."""

from .ctmrg import CtmrgConfig, Environment, anneal_run, converge, ctmrg_step, init_environment
from .observables import ObservableRecord, correlation_length, free_energy_density, magnetization, measure
from .tensors import ClockParams, bulk_tensor, character_coefficients, impurity_tensor, peps_tensor

__version__ = "0.1.0"
