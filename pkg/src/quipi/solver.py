"""Inverse power iteration driven by a squeezed qumode ancilla.

Each round tensors the qubit register with a fresh resource state, applies
exp(-i H (x) p), post-selects the qumode on the finite-squeezed zero-position
state and keeps the renormalized qubit state. The qubit register stays
coherent between rounds.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .evolution import compile_trotter, evolve_exact, run_circuit
from .hamiltonians import LocalHamiltonian, Spectrum, diagonalize, expectation
from .hilbert import FockBackend, GridBackend, HybridState
from .qumode import ProjectionKernel, analytic_amplitude, apply_projection, resource_qumode

OVERLAP_WARNING = 1e-12
REPORT_COLUMNS = ("k", "energy", "energy_error", "success_prob", "cumulative_success", "ground_fidelity")


class ShiftError(ValueError):
    """The shifted Hamiltonian has a non-positive eigenvalue."""


class ProjectionFailure(RuntimeError):
    """Post-selection produced a zero residue."""


@dataclass(frozen=True)
class QuipiConfig:
    """Run parameters.

    ``cut=None`` uses the untruncated resource state. ``trotter_steps=0``
    means exact evolution. ``initial_state`` is a textual state spec (see
    :func:`parse_state`) used when no vector is passed to :func:`quipi_solve`.
    """

    s: float = 10.0
    cut: int | None = 20
    iterations: int = 3
    trotter_steps: int = 0
    backend: str = "grid"
    fock_cut: int = 60
    grid_points: int = 4096
    grid_width: float = 8.0
    shots: int = 0
    seed: int = 0
    initial_state: str | None = None

    def __post_init__(self):
        if not self.s > 0:
            raise ValueError("squeezing factor s must be positive")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.trotter_steps < 0:
            raise ValueError("trotter_steps must be >= 0")
        if self.shots < 0:
            raise ValueError("shots must be >= 0")
        if self.backend not in ("grid", "fock"):
            raise ValueError(f"backend must be 'grid' or 'fock', got {self.backend!r}")
        if self.cut is not None and self.cut < 0:
            raise ValueError("cut must be non-negative")

    def make_backend(self) -> FockBackend | GridBackend:
        if self.backend == "fock":
            return FockBackend(self.fock_cut)
        return GridBackend.for_squeezing(self.s, self.grid_points, self.grid_width)


@dataclass(frozen=True)
class IterationReport:
    k: int
    energy: float
    energy_error: float
    success_probability: float
    cumulative_success: float
    ground_fidelity: float
    energy_stderr: float = 0.0

    def row(self) -> list[str]:
        vals = (self.energy, self.energy_error, self.success_probability, self.cumulative_success, self.ground_fidelity)
        return [str(self.k), *(f"{v:.17g}" for v in vals)]


@dataclass(frozen=True)
class QuipiResult:
    reports: tuple[IterationReport, ...]
    state: np.ndarray
    target_energy: float
    initial_energy: float
    warnings: tuple[str, ...] = field(default=())

    @property
    def final(self) -> IterationReport:
        return self.reports[-1]

    def to_csv(self) -> str:
        return reports_csv(self.reports)


def reports_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for r in reports:
        w.writerow(r.row())
    return buf.getvalue()


_TERM = re.compile(r"\s*([+-]?)\s*([01]+)")


def parse_state(spec: str, qubit_count: int) -> np.ndarray:
    """Normalized qubit vector from a short text spec.

    Accepted forms: ``zero``, ``plus``, ``minus`` (|-> on every qubit), a bit
    string such as ``01``, or a signed sum of bit strings such as ``01-10``.
    """
    text = spec.strip().lower()
    dim = 1 << qubit_count
    if text == "zero":
        v = np.zeros(dim, complex)
        v[0] = 1
        return v
    if text == "plus":
        return np.full(dim, dim**-0.5, dtype=complex)
    if text == "minus":
        signs = [(-1.0) ** bin(i).count("1") for i in range(dim)]
        return np.array(signs, dtype=complex) * dim**-0.5
    v = np.zeros(dim, complex)
    pos = 0
    while pos < len(text):
        m = _TERM.match(text, pos)
        if m is None or m.end() == pos:
            raise ValueError(f"cannot parse state spec {spec!r}")
        bits = m.group(2)
        if len(bits) != qubit_count:
            raise ValueError(f"bit string {bits!r} does not have {qubit_count} qubits")
        v[int(bits, 2)] += -1.0 if m.group(1) == "-" else 1.0
        pos = m.end()
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ValueError(f"state spec {spec!r} is the zero vector")
    return v / norm


def target_index(spectrum: Spectrum) -> int:
    """Index of the eigenvalue of smallest magnitude (the fixed point of inverse iteration)."""
    return int(np.argmin(np.abs(spectrum.eigenvalues)))


def subspace_fidelity(basis: np.ndarray, state: np.ndarray) -> float:
    """Squared norm of the projection of ``state`` onto the span of ``basis`` columns."""
    amp = basis.conj().T @ state
    return float(np.vdot(amp, amp).real / np.vdot(state, state).real)


class EnergyEstimate(NamedTuple):
    value: float
    stderr: float


def qee_energy(state: np.ndarray, h: LocalHamiltonian, shots: int = 0, seed: int = 0) -> EnergyEstimate:
    """Term-by-term energy estimate, shift included.

    With ``shots > 0`` each non-identity term is measured ``shots`` times by
    drawing the number of +1 outcomes from its exact binomial distribution.
    The standard error is sum_l |c_l| sigma_l / sqrt(shots) with sigma_l the
    sample standard deviation of the +-1 outcomes.
    """
    if shots < 0:
        raise ValueError("shots must be >= 0")
    exact = expectation(h, state)
    if shots == 0:
        return EnergyEstimate(exact, 0.0)
    state = np.asarray(state, dtype=complex)
    rng = np.random.default_rng(seed)
    value = h.shift
    err = 0.0
    for c, p in h.terms:
        if p.is_identity:
            value += c
            continue
        mean = float(np.vdot(state, p.apply(state)).real)
        plus = min(max(0.5 * (1.0 + mean), 0.0), 1.0)
        sample = 2.0 * rng.binomial(shots, plus) / shots - 1.0
        value += c * sample
        err += abs(c) * np.sqrt(max(1.0 - sample * sample, 0.0)) / np.sqrt(shots)
    return EnergyEstimate(float(value), float(err))


def oracle_inverse_iterate(h: LocalHamiltonian, b: np.ndarray, k: int, require_positive: bool = True) -> np.ndarray:
    """Normalized H^-k |b> from the dense spectrum."""
    if k < 0:
        raise ValueError("k must be >= 0")
    spec = diagonalize(h)
    if require_positive and spec.eigenvalues[0] <= 0:
        raise ShiftError("shifted Hamiltonian is not positive definite")
    if np.any(spec.eigenvalues == 0):
        raise ZeroDivisionError("Hamiltonian is singular")
    coeffs = (spec.eigenvectors.conj().T @ np.asarray(b, complex)) / spec.eigenvalues.astype(complex) ** k
    out = spec.eigenvectors @ coeffs
    return out / np.linalg.norm(out)


def finite_squeezing_oracle(h: LocalHamiltonian, b: np.ndarray, s: float, k: int) -> tuple[np.ndarray, float]:
    """State with eigen-amplitudes b_n f_s(E_n)^k, normalized, and the last-round success probability.

    This is what k rounds with the untruncated resource and exact evolution
    produce.
    """
    spec = diagonalize(h)
    amps = spec.eigenvectors.conj().T @ np.asarray(b, complex)
    f = analytic_amplitude(spec.eigenvalues, s)
    before = amps * f ** (k - 1) if k >= 1 else amps
    before = before / np.linalg.norm(before)
    after = amps * f**k
    prob = float(np.sum(np.abs(before * f) ** 2)) if k >= 1 else 1.0
    out = spec.eigenvectors @ after
    return out / np.linalg.norm(out), prob


def quipi_solve(
    h: LocalHamiltonian,
    config: QuipiConfig = QuipiConfig(),
    initial_state: np.ndarray | None = None,
    require_positive: bool = True,
) -> QuipiResult:
    """Run ``config.iterations`` rounds and report energies without the shift.

    The reference energy is the eigenvalue of smallest magnitude of the
    shifted Hamiltonian, so an excited level can be targeted by choosing the
    shift; set ``require_positive=False`` for that.
    """
    spec = diagonalize(h)
    if require_positive and spec.eigenvalues[0] <= 0:
        raise ShiftError(f"smallest shifted eigenvalue {spec.eigenvalues[0]:.6g} is not positive")
    if initial_state is None:
        if config.initial_state is None:
            raise ValueError("no initial state given")
        initial_state = parse_state(config.initial_state, h.qubit_count)
    b = np.asarray(initial_state, dtype=complex)
    if b.shape != (h.dimension,):
        raise ValueError(f"initial state has shape {b.shape}, expected ({h.dimension},)")
    b = b / np.linalg.norm(b)

    idx = target_index(spec)
    target = spec.eigenspace(idx)
    target_energy = float(spec.eigenvalues[idx]) - h.shift
    warnings = []
    if subspace_fidelity(target, b) < OVERLAP_WARNING:
        warnings.append("initial state has negligible overlap with the target eigenspace")

    backend = config.make_backend()
    qumode = resource_qumode(config.s, backend, config.cut)
    kernel = ProjectionKernel(config.s)
    circuit = compile_trotter(h, config.trotter_steps) if config.trotter_steps else None

    reports = []
    cumulative = 1.0
    for k in range(1, config.iterations + 1):
        joint = HybridState.product(b, qumode)
        joint = run_circuit(joint, circuit) if circuit is not None else evolve_exact(joint, h)
        proj = apply_projection(joint, kernel)
        if not proj.ok:
            raise ProjectionFailure(f"projection residue vanished at iteration {k}")
        b = proj.qubit_state
        cumulative *= proj.success_probability
        est = qee_energy(b, h, config.shots, config.seed + k)
        energy = est.value - h.shift
        reports.append(
            IterationReport(
                k=k,
                energy=energy,
                energy_error=abs(energy - target_energy),
                success_probability=proj.success_probability,
                cumulative_success=cumulative,
                ground_fidelity=subspace_fidelity(target, b),
                energy_stderr=est.stderr,
            )
        )
    initial_energy = expectation(h, np.asarray(initial_state, complex) / np.linalg.norm(initial_state)) - h.shift
    return QuipiResult(tuple(reports), b, target_energy, initial_energy, tuple(warnings))
