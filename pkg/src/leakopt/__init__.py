"""Optimal control of a qubit with a weakly off-resonant leakage level."""

from .errors import LeakoptError
from .fidelity import FidelityReport, PenaltyConfig, evaluate, phi1, phi2
from .model import ModelParams, drive_generator, rwa_hamiltonian, target_not_gate
from .optimizer import OptimizationResult, OptimizerConfig, grape_optimize, multi_start
from .propagation import evolve_state, propagate
from .pulses import ControlPulse, composite_sequence, gaussian_pulse, rectangular_pulse

__all__ = [
    "ControlPulse",
    "FidelityReport",
    "LeakoptError",
    "ModelParams",
    "OptimizationResult",
    "OptimizerConfig",
    "PenaltyConfig",
    "composite_sequence",
    "drive_generator",
    "evaluate",
    "evolve_state",
    "gaussian_pulse",
    "grape_optimize",
    "multi_start",
    "phi1",
    "phi2",
    "propagate",
    "rectangular_pulse",
    "rwa_hamiltonian",
    "target_not_gate",
]

__version__ = "0.1.0"
