"""Density-matrix simulation with boson loss and qubit depolarization, plus zero-noise extrapolation.

Noise acts after every gate: the gate's unitary, then the loss channel on the
qumode, then depolarization on each qubit the gate touched (the qumode-only
phase gate touches none).
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, replace
from fractions import Fraction
from math import factorial, sqrt
from typing import Sequence

import numpy as np

from .evolution import Circuit, Gate, compile_trotter, gates_matrix
from .hamiltonians import LocalHamiltonian, diagonalize
from .hilbert import FockBackend, HybridDensityMatrix, annihilation_operator
from .qumode import ProjectionKernel, resource_qumode
from .solver import (
    IterationReport,
    ProjectionFailure,
    QuipiConfig,
    QuipiResult,
    ShiftError,
    parse_state,
    target_index,
)

DENSE_RHO_LIMIT = 1024

_PAULIS = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


@dataclass(frozen=True)
class LossChannel:
    """Boson loss with per-gate probability ``p_loss``.

    Kraus operators E_k = p^(k/2) / sqrt(k!) (1-p)^(n/2) a^k for k < kraus_rank.
    """

    p_loss: float
    kraus_rank: int = 8

    def __post_init__(self):
        if not 0.0 <= self.p_loss < 1.0:
            raise ValueError("p_loss must lie in [0, 1)")
        if self.kraus_rank < 1:
            raise ValueError("kraus_rank must be >= 1")

    def kraus_operators(self, cut: int) -> list[np.ndarray]:
        return list(_loss_kraus(float(self.p_loss), self.kraus_rank, cut))

    def scaled(self, factor: float) -> "LossChannel":
        return replace(self, p_loss=self.p_loss * factor)


@functools.lru_cache(maxsize=64)
def _loss_kraus(p: float, rank: int, cut: int) -> tuple[np.ndarray, ...]:
    a = annihilation_operator(cut)
    damp = np.diag((1.0 - p) ** (np.arange(cut + 1) / 2.0)).astype(complex)
    ops = []
    ak = np.eye(cut + 1, dtype=complex)
    for k in range(min(rank, cut + 1)):
        ops.append(sqrt(p**k / factorial(k)) * damp @ ak)
        ak = ak @ a
    return tuple(ops)


@dataclass(frozen=True)
class DepolarizingChannel:
    """rho -> (1-p) rho + p/3 (X rho X + Y rho Y + Z rho Z) on each affected qubit."""

    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("depolarizing probability must lie in [0, 1]")

    def scaled(self, factor: float) -> "DepolarizingChannel":
        return replace(self, p=self.p * factor)


@dataclass(frozen=True)
class ZneSchedule:
    scale_factors: tuple[float, ...] = (1.0, 2.0, 3.0)

    def __post_init__(self):
        scales = tuple(float(x) for x in self.scale_factors)
        if len(scales) < 2:
            raise ValueError("need at least two scale factors")
        if len(set(scales)) != len(scales):
            raise ValueError("scale factors must be distinct")
        if min(scales) < 1.0:
            raise ValueError("scale factors must be >= 1")
        object.__setattr__(self, "scale_factors", scales)


# --- channel application on a (Q, D, Q, D) tensor ------------------------------

def _as_tensor(rho: HybridDensityMatrix) -> np.ndarray:
    q = 1 << rho.qubit_count
    d = rho.qumode_dim
    return rho.matrix.reshape(q, d, q, d)


def apply_loss(rho: HybridDensityMatrix, loss: LossChannel) -> HybridDensityMatrix:
    if rho.backend is None:
        return rho
    q = 1 << rho.qubit_count
    d = rho.qumode_dim
    # (i a j b) -> (i j a b): batched D x D blocks
    blocks = rho.matrix.reshape(q, d, q, d).transpose(0, 2, 1, 3)
    out = np.zeros_like(blocks)
    for e in loss.kraus_operators(rho.backend.cut):
        out += e @ blocks @ e.conj().T
    return rho.with_matrix(out.transpose(0, 2, 1, 3).reshape(rho.matrix.shape))


def apply_depolarizing(rho: HybridDensityMatrix, qubit: int, channel: DepolarizingChannel) -> HybridDensityMatrix:
    if channel.p == 0.0:
        return rho
    n = rho.qubit_count
    d = rho.qumode_dim
    shape = (2,) * n + (d,)
    t = rho.matrix.reshape(shape + shape)
    acc = (1.0 - channel.p) * t
    for pauli in _PAULIS:
        u = np.moveaxis(np.tensordot(pauli, t, axes=([1], [qubit])), 0, qubit)
        col = n + 1 + qubit
        u = np.moveaxis(np.tensordot(u, pauli.conj().T, axes=([col], [0])), -1, col)
        acc = acc + (channel.p / 3.0) * u
    return rho.with_matrix(acc.reshape(rho.matrix.shape))


@functools.lru_cache(maxsize=4096)
def _gate_unitary(gate: Gate, qubit_count: int, cut: int) -> np.ndarray:
    return gates_matrix([gate], qubit_count, cut)


def run_noisy_circuit(
    rho: HybridDensityMatrix,
    circuit: Circuit,
    loss: LossChannel | None = None,
    depol: DepolarizingChannel | None = None,
    dense_limit: int = DENSE_RHO_LIMIT,
) -> HybridDensityMatrix:
    """Apply ``circuit`` gate by gate with noise after each gate."""
    if not isinstance(rho.backend, FockBackend):
        raise TypeError("noisy simulation needs a Fock-backend density matrix")
    if rho.qubit_count != circuit.qubit_count:
        raise ValueError(f"state has {rho.qubit_count} qubits, circuit needs {circuit.qubit_count}")
    dim = rho.matrix.shape[0]
    if dim > dense_limit:
        raise ValueError(f"density-matrix dimension {dim} exceeds limit {dense_limit}")
    cut = rho.backend.cut
    for g in circuit.gates:
        u = _gate_unitary(g, circuit.qubit_count, cut)
        rho = rho.with_matrix(u @ rho.matrix @ u.conj().T)
        if loss is not None and loss.p_loss > 0.0:
            rho = apply_loss(rho, loss)
        if depol is not None:
            for q in g.qubits:
                rho = apply_depolarizing(rho, q, depol)
    return rho


def project_density(rho: HybridDensityMatrix, kernel: ProjectionKernel) -> tuple[np.ndarray, float]:
    """Qubit density matrix after post-selecting |q=0,s>, normalized, and the success probability."""
    v = kernel.fock_coefficients(rho.backend.cut).conj()
    t = _as_tensor(rho)
    sub = np.einsum("b,ibjc,c->ij", v, t, v.conj(), optimize=True)
    total = rho.trace()
    prob = float(np.trace(sub).real) / total
    if not prob > 0.0:
        raise ProjectionFailure("projection has zero success probability")
    sub = sub / np.trace(sub).real
    return 0.5 * (sub + sub.conj().T), prob


def noisy_quipi(
    h: LocalHamiltonian,
    config: QuipiConfig,
    loss: LossChannel | None = None,
    depol: DepolarizingChannel | None = None,
    initial_state: np.ndarray | None = None,
    require_positive: bool = True,
) -> QuipiResult:
    """Inverse iteration in density-matrix form on the Fock backend.

    ``config.trotter_steps`` must be at least 1; the final ``state`` is the
    qubit density matrix.
    """
    if config.trotter_steps < 1:
        raise ValueError("noisy runs need trotter_steps >= 1")
    spec = diagonalize(h)
    if require_positive and spec.eigenvalues[0] <= 0:
        raise ShiftError(f"smallest shifted eigenvalue {spec.eigenvalues[0]:.6g} is not positive")
    if initial_state is None:
        if config.initial_state is None:
            raise ValueError("no initial state given")
        initial_state = parse_state(config.initial_state, h.qubit_count)
    b = np.asarray(initial_state, dtype=complex)
    b = b / np.linalg.norm(b)

    backend = FockBackend(config.fock_cut)
    r = resource_qumode(config.s, backend, config.cut).amplitudes
    resource = np.outer(r, r.conj())
    kernel = ProjectionKernel(config.s)
    circuit = compile_trotter(h, config.trotter_steps)
    idx = target_index(spec)
    basis = spec.eigenspace(idx)
    proj_target = basis @ basis.conj().T
    target_energy = float(spec.eigenvalues[idx]) - h.shift
    hmat = h.matrix()

    qubits = np.outer(b, b.conj())
    reports = []
    cumulative = 1.0
    for k in range(1, config.iterations + 1):
        rho = HybridDensityMatrix(h.qubit_count, backend, np.kron(qubits, resource))
        rho = run_noisy_circuit(rho, circuit, loss, depol)
        qubits, prob = project_density(rho, kernel)
        cumulative *= prob
        energy = float(np.trace(qubits @ hmat).real) - h.shift
        reports.append(
            IterationReport(
                k=k,
                energy=energy,
                energy_error=abs(energy - target_energy),
                success_probability=prob,
                cumulative_success=cumulative,
                ground_fidelity=float(np.trace(proj_target @ qubits).real),
            )
        )
    initial_energy = float(np.vdot(b, hmat @ b).real) - h.shift
    return QuipiResult(tuple(reports), qubits, target_energy, initial_energy)


def richardson_weights(scales: Sequence[float]) -> np.ndarray:
    """Weights w_i with sum_i w_i E(scale_i) equal to the degree-(m-1) interpolant at zero."""
    xs = [Fraction(x).limit_denominator(10**9) for x in scales]
    if len(set(xs)) != len(xs):
        raise ValueError("duplicate scale factors")
    if len(xs) < 2:
        raise ValueError("need at least two scale factors")
    w = []
    for i, xi in enumerate(xs):
        num = Fraction(1)
        for j, xj in enumerate(xs):
            if j != i:
                num *= xj / (xj - xi)
        w.append(float(num))
    return np.array(w)


def zne_extrapolate(points: Sequence[tuple[float, float]]) -> float:
    """Extrapolate (scale, energy) pairs to zero noise through the interpolating polynomial."""
    scales = [float(s) for s, _ in points]
    if len(set(scales)) != len(scales):
        raise ValueError("duplicate scale factors")
    weights = richardson_weights(scales)
    return float(np.dot(weights, [e for _, e in points]))


@dataclass(frozen=True)
class MitigatedRun:
    scales: tuple[float, ...]
    runs: tuple[QuipiResult, ...]
    energies: tuple[float, ...]
    errors: tuple[float, ...]


def mitigated_quipi(
    h: LocalHamiltonian,
    config: QuipiConfig,
    loss: LossChannel | None = None,
    depol: DepolarizingChannel | None = None,
    schedule: ZneSchedule = ZneSchedule(),
    initial_state: np.ndarray | None = None,
) -> MitigatedRun:
    """Run at each noise scale and extrapolate the energy of every iteration to zero noise."""
    runs = []
    for scale in schedule.scale_factors:
        runs.append(
            noisy_quipi(
                h,
                config,
                None if loss is None else loss.scaled(scale),
                None if depol is None else depol.scaled(scale),
                initial_state,
            )
        )
    energies = []
    for k in range(config.iterations):
        energies.append(zne_extrapolate([(s, r.reports[k].energy) for s, r in zip(schedule.scale_factors, runs)]))
    target = runs[0].target_energy
    return MitigatedRun(
        schedule.scale_factors, tuple(runs), tuple(energies), tuple(abs(e - target) for e in energies)
    )
