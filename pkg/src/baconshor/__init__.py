"""Simulator for error detection with the four-qubit Bacon-Shor code.

Two engines (exact density matrices and stabilizer sampling) run random
logical circuits under depolarizing noise; :mod:`baconshor.sitecount`
gives the matching closed-form bounds.
"""

__version__ = "0.1.0"

from .bacon_shor import AcceptanceRule, LogicalGate, assemble_encoded_circuit, prep_circuit
from .densmat import NoiseModel, run_encoded, run_encoded_batch
from .experiment import ExperimentConfig, fit_threshold, sweep
from .pauli import Gate, PauliString, PhysicalCircuit
from .sitecount import SiteCountParams, optimal_gap, sitecount_threshold
from .stabsim import Tableau, estimate, run_trajectory

__all__ = [
    "AcceptanceRule",
    "ExperimentConfig",
    "Gate",
    "LogicalGate",
    "NoiseModel",
    "PauliString",
    "PhysicalCircuit",
    "SiteCountParams",
    "Tableau",
    "assemble_encoded_circuit",
    "estimate",
    "fit_threshold",
    "optimal_gap",
    "prep_circuit",
    "run_encoded",
    "run_encoded_batch",
    "run_trajectory",
    "sitecount_threshold",
    "sweep",
]
