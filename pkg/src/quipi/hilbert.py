"""Hybrid qubit x qumode states.

Two interchangeable representations of the single qumode are provided:

* ``FockBackend`` -- number states |0>..|cut>, with q = (a + a^dag)/sqrt(2)
  and p = (a - a^dag)/(i sqrt(2)).
* ``GridBackend`` -- the momentum wavefunction psi(p) sampled on a uniform
  grid. The momentum operator is diagonal here, so couplings of the form
  exp(-i A p) act pointwise.

Amplitudes of a ``HybridState`` are stored as a ``(2**N, D)`` array: qubit
index major, qumode index minor. Grid states also carry quadrature weights so
that inner products are ``sum_k w_k conj(a_k) b_k``; half-line states use
end-corrected weights at p = 0.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from functools import cached_property
from math import floor

import numpy as np


@dataclass(frozen=True)
class FockBackend:
    cut: int = 60

    def __post_init__(self):
        if self.cut < 0:
            raise ValueError("Fock cut must be non-negative")

    @property
    def dim(self) -> int:
        return self.cut + 1


@dataclass(frozen=True)
class GridBackend:
    """Uniform momentum grid p_k = p_min + k*dp, k = 0..points-1, dp = (p_max - p_min)/points.

    With symmetric bounds and an even number of points, p = 0 is the grid
    point ``points // 2``.
    """

    p_min: float
    p_max: float
    points: int = 4096

    def __post_init__(self):
        if not self.p_max > self.p_min:
            raise ValueError("p_max must exceed p_min")
        if self.points < 2:
            raise ValueError("grid needs at least two points")

    @classmethod
    def for_squeezing(cls, s: float, points: int = 4096, width: float = 8.0) -> "GridBackend":
        """Symmetric grid |p| <= width * s."""
        return cls(-width * s, width * s, points)

    @property
    def dim(self) -> int:
        return self.points

    @property
    def spacing(self) -> float:
        return (self.p_max - self.p_min) / self.points

    @cached_property
    def momenta(self) -> np.ndarray:
        return self.p_min + self.spacing * np.arange(self.points)

    @property
    def zero_index(self) -> int | None:
        k = round(-self.p_min / self.spacing)
        if 0 <= k < self.points and abs(self.p_min + k * self.spacing) < 1e-12 * self.spacing:
            return k
        return None

    def uniform_weights(self) -> np.ndarray:
        return np.full(self.points, self.spacing)


Backend = FockBackend | GridBackend


def annihilation_operator(cut: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cut + 1, dtype=float)), 1).astype(complex)


def momentum_operator(cut: int) -> np.ndarray:
    """Truncated p = (a - a^dag)/(i sqrt(2)) on Fock levels 0..cut."""
    if cut < 1:
        raise ValueError("cut must be >= 1")
    a = annihilation_operator(cut)
    return (a - a.conj().T) / (1j * np.sqrt(2.0))


def number_operator(cut: int) -> np.ndarray:
    return np.diag(np.arange(cut + 1, dtype=float)).astype(complex)


@dataclass(frozen=True)
class FockQumode:
    backend: FockBackend
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.backend.dim,):
            raise ValueError(f"expected {self.backend.dim} Fock amplitudes, got {amps.shape}")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def weights(self) -> np.ndarray:
        return np.ones(self.backend.dim)

    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    @classmethod
    def vacuum(cls, cut: int) -> "FockQumode":
        amps = np.zeros(cut + 1, dtype=complex)
        amps[0] = 1.0
        return cls(FockBackend(cut), amps)


@dataclass(frozen=True)
class GridQumode:
    backend: GridBackend
    amplitudes: np.ndarray
    weights: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.backend.points,):
            raise ValueError(f"expected {self.backend.points} grid samples, got {amps.shape}")
        object.__setattr__(self, "amplitudes", amps)
        w = self.backend.uniform_weights() if self.weights is None else np.asarray(self.weights, float)
        object.__setattr__(self, "weights", w)

    def norm_squared(self) -> float:
        return float(np.sum(self.weights * np.abs(self.amplitudes) ** 2))


Qumode = FockQumode | GridQumode


@dataclass(frozen=True)
class HybridState:
    """Joint register of N qubits and one qumode.

    ``backend`` is None once the qumode has been projected out; the qumode
    axis then has length 1. ``norm_tracking`` is the product of the
    post-selection amplitudes (square roots of success probabilities)
    accumulated so far.
    """

    qubit_count: int
    backend: Backend | None
    amplitudes: np.ndarray
    weights: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]
    norm_tracking: float = 1.0

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        dim = 1 if self.backend is None else self.backend.dim
        if amps.shape != (1 << self.qubit_count, dim):
            raise ValueError(f"amplitudes have shape {amps.shape}, expected {(1 << self.qubit_count, dim)}")
        object.__setattr__(self, "amplitudes", amps)
        if self.weights is None:
            w = self.backend.uniform_weights() if isinstance(self.backend, GridBackend) else np.ones(dim)
            object.__setattr__(self, "weights", w)
        if not 0 < self.norm_tracking <= 1 + 1e-12:
            raise ValueError(f"norm_tracking must lie in (0, 1], got {self.norm_tracking}")

    @classmethod
    def product(cls, qubits: np.ndarray, qumode: Qumode, norm_tracking: float = 1.0) -> "HybridState":
        qubits = np.asarray(qubits, dtype=complex)
        n = int(np.log2(qubits.size))
        if 1 << n != qubits.size:
            raise ValueError("qubit vector length must be a power of two")
        return cls(n, qumode.backend, np.outer(qubits, qumode.amplitudes), qumode.weights, norm_tracking)

    @property
    def is_collapsed(self) -> bool:
        return self.backend is None

    def with_amplitudes(self, amplitudes: np.ndarray) -> "HybridState":
        return replace(self, amplitudes=amplitudes)

    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2 * self.weights[None, :]))

    def to_vector(self) -> np.ndarray:
        """Flattened amplitudes in qubit-major order (grid samples are not weight-scaled)."""
        return self.amplitudes.reshape(-1)

    def dumps_csv(self) -> str:
        """``index,re,im`` rows in the flattened layout."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "re", "im"])
        for i, a in enumerate(self.to_vector()):
            w.writerow([i, f"{a.real:.17g}", f"{a.imag:.17g}"])
        return buf.getvalue()


def qubit_marginal(state: HybridState) -> tuple[np.ndarray, float]:
    """Normalized qubit vector of a projected state and its squared norm.

    The squared norm before normalization is the projection success
    probability.
    """
    if not state.is_collapsed:
        raise ValueError("qumode axis has not been projected out")
    vec = state.amplitudes[:, 0]
    prob = float(np.vdot(vec, vec).real)
    if prob == 0.0:
        raise ZeroDivisionError("projected state has zero norm")
    return vec / np.sqrt(prob), prob


def fock_leakage(state: HybridState) -> float:
    """Probability on the top 10% of Fock levels, n >= floor(0.9 * cut)."""
    if not isinstance(state.backend, FockBackend):
        raise TypeError("fock_leakage needs a Fock-backend state")
    start = floor(0.9 * state.backend.cut)
    return float(np.sum(np.abs(state.amplitudes[:, start:]) ** 2))


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """|<a|b>|^2 for normalized vectors."""
    return float(abs(np.vdot(a, b)) ** 2)


@dataclass(frozen=True)
class HybridDensityMatrix:
    """Density matrix on the (2**N * D)-dimensional hybrid space (Fock backend only)."""

    qubit_count: int
    backend: FockBackend | None
    matrix: np.ndarray
    norm_tracking: float = 1.0

    def __post_init__(self):
        if isinstance(self.backend, GridBackend):
            raise TypeError("density matrices are supported on the Fock backend only")
        m = np.asarray(self.matrix, dtype=complex)
        d = (1 << self.qubit_count) * (1 if self.backend is None else self.backend.dim)
        if m.shape != (d, d):
            raise ValueError(f"matrix has shape {m.shape}, expected {(d, d)}")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_state(cls, state: HybridState) -> "HybridDensityMatrix":
        v = state.to_vector()
        return cls(state.qubit_count, state.backend, np.outer(v, v.conj()), state.norm_tracking)  # type: ignore[arg-type]

    @property
    def qumode_dim(self) -> int:
        return 1 if self.backend is None else self.backend.dim

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def purity(self) -> float:
        t = self.trace()
        return float(np.vdot(self.matrix, self.matrix).real) / t**2

    def hermiticity_residual(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def qubit_reduced(self) -> np.ndarray:
        """Partial trace over the qumode."""
        q = 1 << self.qubit_count
        d = self.qumode_dim
        return np.einsum("ikjk->ij", self.matrix.reshape(q, d, q, d))

    def with_matrix(self, matrix: np.ndarray) -> "HybridDensityMatrix":
        return replace(self, matrix=matrix)
