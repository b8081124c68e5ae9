"""Ancilla-free inverse iteration: H^-k approximated by Riemann sums of evolutions.

    H^-k |b>  ~  sum_{j_1..j_k} exp(-i H j_1 dp) ... exp(-i H j_k dp) dp^k |b>,

with each j running over 0..M-1. The constant factor i^k of the exact
integral is dropped; it cancels in the Rayleigh quotient.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .hamiltonians import LocalHamiltonian, diagonalize
from .solver import ShiftError, target_index

BRUTE_FORCE_LIMIT = 10**6


@dataclass(frozen=True)
class HybridIPIConfig:
    """Step ``delta_p``, number of terms ``m_j`` per sum and inversion power ``k``.

    ``damping`` > 0 multiplies term j by exp(-(j dp)^2 / damping^2).
    """

    delta_p: float
    m_j: int
    k: int = 1
    damping: float | None = None

    def __post_init__(self):
        if not self.delta_p > 0:
            raise ValueError("delta_p must be positive")
        if self.m_j < 1:
            raise ValueError("m_j must be >= 1")
        if self.k < 0:
            raise ValueError("k must be >= 0")
        if self.damping is not None and not self.damping > 0:
            raise ValueError("damping width must be positive")

    @property
    def phi_max(self) -> float:
        return self.m_j * self.delta_p

    def weights(self) -> np.ndarray:
        t = np.arange(self.m_j) * self.delta_p
        w = np.full(self.m_j, self.delta_p)
        if self.damping is not None:
            w = w * np.exp(-((t / self.damping) ** 2))
        return w


def riemann_factor(energies, config: HybridIPIConfig) -> np.ndarray:
    """sum_j w_j exp(-i E j dp) for each energy."""
    e = np.atleast_1d(np.asarray(energies, dtype=float))
    t = np.arange(config.m_j) * config.delta_p
    return np.exp(-1j * np.outer(e, t)) @ config.weights()


def geometric_factor(energy: float, config: HybridIPIConfig) -> complex:
    """Closed form of the undamped single sum."""
    if config.damping is not None:
        raise ValueError("closed form only for the undamped sum")
    # (1 - z^m) / (1 - z) with z = exp(-i theta), written without cancellation
    theta, m = energy * config.delta_p, config.m_j
    half = np.sin(theta / 2)
    if abs(half) < 1e-6:
        # near a full period the ratio of sines loses accuracy; sum directly
        return complex(riemann_factor(energy, config)[0])
    return complex(config.delta_p * np.exp(-0.5j * theta * (m - 1)) * np.sin(m * theta / 2) / half)


def hybrid_inverse_apply(h: LocalHamiltonian, b: np.ndarray, config: HybridIPIConfig) -> np.ndarray:
    """Unnormalized sum over all index tuples, factorized on the spectrum as (sum_j ...)^k."""
    spec = diagonalize(h)
    if spec.eigenvalues[0] <= 0:
        raise ShiftError("shifted Hamiltonian is not positive definite")
    b = np.asarray(b, dtype=complex)
    g = riemann_factor(spec.eigenvalues, config)
    return spec.eigenvectors @ (g**config.k * (spec.eigenvectors.conj().T @ b))


def hybrid_inverse_bruteforce(h: LocalHamiltonian, b: np.ndarray, config: HybridIPIConfig) -> np.ndarray:
    """Direct sum over every tuple (j_1..j_k) with dense exponentials; for testing."""
    count = config.m_j**config.k
    if count > BRUTE_FORCE_LIMIT:
        raise ValueError(f"{count} index tuples exceed the brute-force limit")
    hm = h.matrix()
    w = config.weights()
    steps = [expm(-1j * hm * j * config.delta_p) for j in range(config.m_j)]
    b = np.asarray(b, dtype=complex)
    out = np.zeros_like(b)
    for js in itertools.product(range(config.m_j), repeat=config.k):
        v = b
        for j in js:
            v = steps[j] @ v
        out += np.prod(w[list(js)]) * v
    return out


def hybrid_energy(h: LocalHamiltonian, b: np.ndarray, config: HybridIPIConfig) -> float:
    """Rayleigh quotient of the summed state, in unshifted units."""
    psi = hybrid_inverse_apply(h, b, config)
    norm = np.vdot(psi, psi).real
    if norm == 0.0:
        raise ZeroDivisionError("summed state has zero norm")
    return float(np.vdot(psi, h.apply(psi)).real / norm) - h.shift


def ideal_inverse_energy(h: LocalHamiltonian, b: np.ndarray, k: int) -> float:
    """Energy of H^-k |b>, unshifted."""
    spec = diagonalize(h)
    c = (spec.eigenvectors.conj().T @ np.asarray(b, complex)) / spec.eigenvalues**k
    p = np.abs(c) ** 2
    return float(np.dot(p, spec.eigenvalues) / p.sum()) - h.shift


def reference_energy(h: LocalHamiltonian) -> float:
    spec = diagonalize(h)
    return float(spec.eigenvalues[target_index(spec)]) - h.shift


@dataclass(frozen=True)
class TimeBudget:
    max_evolution_time: float
    total_evolution_time: float
    evolutions: int


def evolution_time_budget(config: HybridIPIConfig) -> TimeBudget:
    """Longest chained evolution (M-1) dp k and the time summed over all index tuples."""
    m, k, dp = config.m_j, config.k, config.delta_p
    longest = (m - 1) * dp * k
    # each of the k slots runs over sum_j j dp, repeated for m^(k-1) choices of the rest
    total = k * m ** (k - 1) * dp * m * (m - 1) / 2 if k else 0.0
    return TimeBudget(float(longest), float(total), m**k)


QUIPI_EVOLUTION_TIME = 1.0
