"""Hybrid qubit-qumode simulator and inverse-iteration eigensolver."""

from .hamiltonians import (
    LocalHamiltonian,
    PauliString,
    Spectrum,
    build_h2,
    build_kitaev_ring,
    build_tfim,
    diagonalize,
    expectation,
    validate_shift,
)
from .hilbert import FockBackend, GridBackend, HybridDensityMatrix, HybridState
from .qumode import ProjectionKernel, analytic_amplitude, build_resource, prepare_by_displacements
from .evolution import Circuit, Gate, compile_trotter, evolve_exact, run_circuit
from .solver import IterationReport, QuipiConfig, oracle_inverse_iterate, qee_energy, quipi_solve
from .noise import DepolarizingChannel, LossChannel, ZneSchedule, noisy_quipi, zne_extrapolate
from .hybrid import HybridIPIConfig, evolution_time_budget, hybrid_energy, hybrid_inverse_apply

__all__ = [
    "Circuit",
    "DepolarizingChannel",
    "FockBackend",
    "Gate",
    "GridBackend",
    "HybridDensityMatrix",
    "HybridIPIConfig",
    "HybridState",
    "IterationReport",
    "LocalHamiltonian",
    "LossChannel",
    "PauliString",
    "ProjectionKernel",
    "QuipiConfig",
    "Spectrum",
    "ZneSchedule",
    "analytic_amplitude",
    "build_h2",
    "build_kitaev_ring",
    "build_resource",
    "build_tfim",
    "compile_trotter",
    "diagonalize",
    "evolution_time_budget",
    "evolve_exact",
    "expectation",
    "hybrid_energy",
    "hybrid_inverse_apply",
    "noisy_quipi",
    "oracle_inverse_iterate",
    "prepare_by_displacements",
    "qee_energy",
    "quipi_solve",
    "run_circuit",
    "validate_shift",
    "zne_extrapolate",
]
