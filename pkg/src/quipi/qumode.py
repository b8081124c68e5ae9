"""Finite-squeezed resource state, projection kernel and their Fock expansions.

Momentum wavefunctions used throughout::

    resource   <p|R,s>   = sqrt(2) s^-1/2 pi^-1/4 exp(-p^2 / 2s^2)   for p >= 0, else 0
    projector  <p|q=0,s> =         s^-1/2 pi^-1/4 exp(-p^2 / 2s^2)

and the number-state overlap <n|p> = i^n phi_n(p), with phi_n the normalized
Hermite functions.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial, pi, sqrt

import numpy as np
from scipy import integrate, linalg, special

from .hilbert import (
    FockBackend,
    FockQumode,
    GridBackend,
    GridQumode,
    HybridState,
    annihilation_operator,
    qubit_marginal,
)

QUADRATURE_TOL = 1e-10
MAX_PREPARATION_CUT = 25


class QuadratureError(RuntimeError):
    pass


class PreparationError(RuntimeError):
    """Root finding for the displacement parameters failed."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (polynomial residual {residual:.3e})")
        self.residual = residual


def hermite_functions(n_max: int, p: np.ndarray) -> np.ndarray:
    """phi_0..phi_{n_max} at ``p``, shape ``(n_max + 1,) + p.shape``.

    phi_n = pi^-1/4 (2^n n!)^-1/2 H_n(p) exp(-p^2/2) with physicists' H_n,
    evaluated by the normalized three-term recurrence so that neither H_n nor
    n! is formed.
    """
    p = np.asarray(p, dtype=float)
    out = np.empty((n_max + 1,) + p.shape)
    out[0] = pi**-0.25 * np.exp(-0.5 * p * p)
    if n_max >= 1:
        out[1] = sqrt(2.0) * p * out[0]
    for k in range(2, n_max + 1):
        out[k] = sqrt(2.0 / k) * p * out[k - 1] - sqrt((k - 1) / k) * out[k - 2]
    return out


def number_momentum_overlap(n: int, p: np.ndarray) -> np.ndarray:
    """<n|p> = i^n phi_n(p)."""
    return (1j**n) * hermite_functions(n, p)[n]


def momentum_wavefunction(coefficients: np.ndarray, p: np.ndarray) -> np.ndarray:
    """psi(p) = sum_n c_n <p|n> = sum_n c_n (-i)^n phi_n(p)."""
    c = np.asarray(coefficients, dtype=complex)
    phases = (-1j) ** np.arange(c.size)
    return np.tensordot(c * phases, hermite_functions(c.size - 1, p), axes=1)


def _upper_limit(s: float, cut: int) -> float:
    # past max(8s, turning point + 10) both factors are below double precision
    return max(8.0 * s, sqrt(2.0 * cut + 1.0) + 10.0)


def _fock_projection(s: float, cut: int, lower: float, prefactor: float) -> tuple[np.ndarray, float]:
    upper = _upper_limit(s, cut)
    lo = 0.0 if lower == 0.0 else -upper

    def integrand(p):
        return np.exp(-p * p / (2.0 * s * s)) * hermite_functions(cut, p)

    vals, err = integrate.quad_vec(integrand, lo, upper, epsabs=1e-13, epsrel=1e-12, norm="max", limit=2000)
    if err > QUADRATURE_TOL:
        raise QuadratureError(f"Fock coefficient quadrature error {err:.2e} exceeds {QUADRATURE_TOL}")
    return prefactor * (1j ** np.arange(cut + 1)) * vals, float(err)


@functools.lru_cache(maxsize=64)
def _resource_raw(s: float, cut: int) -> tuple[np.ndarray, float]:
    return _fock_projection(s, cut, 0.0, sqrt(2.0) * s**-0.5 * pi**-0.25)


@functools.lru_cache(maxsize=64)
def _kernel_raw(s: float, cut: int) -> np.ndarray:
    vals, _ = _fock_projection(s, cut, -1.0, s**-0.5 * pi**-0.25)
    vals[1::2] = 0.0  # odd Hermite functions integrate to zero against an even Gaussian
    return vals


@dataclass(frozen=True)
class SqueezedResource:
    """Fock-truncated resource state |R,s> ~ sum_{n<=cut} c_n |n>.

    ``raw_coefficients`` are the exact overlaps <n|R,s>; ``fock_coefficients``
    are the same numbers renormalized over the truncation.
    """

    s: float
    cut: int
    fock_coefficients: np.ndarray
    raw_coefficients: np.ndarray
    quadrature_error: float
    renormalized: bool = True

    @property
    def retained_weight(self) -> float:
        return float(np.sum(np.abs(self.raw_coefficients) ** 2))

    @property
    def discarded_weight(self) -> float:
        return 1.0 - self.retained_weight

    def momentum_wavefunction(self, p: np.ndarray) -> np.ndarray:
        return momentum_wavefunction(self.fock_coefficients, p)


def build_resource(s: float, cut: int) -> SqueezedResource:
    if s <= 0:
        raise ValueError("squeezing factor must be positive")
    if cut < 0:
        raise ValueError("cut must be non-negative")
    raw, err = _resource_raw(float(s), int(cut))
    raw = raw.copy()
    return SqueezedResource(float(s), int(cut), raw / np.linalg.norm(raw), raw, err)


def half_gaussian(s: float, p: np.ndarray) -> np.ndarray:
    """Exact resource wavefunction; the value at p = 0 is the right limit."""
    p = np.asarray(p, dtype=float)
    return np.where(p >= 0, sqrt(2.0) * s**-0.5 * pi**-0.25 * np.exp(-p * p / (2 * s * s)), 0.0)


_GREGORY = (
    Fraction(1, 12), Fraction(1, 24), Fraction(19, 720), Fraction(3, 160),
    Fraction(863, 60480), Fraction(275, 24192),
)


@functools.lru_cache(maxsize=None)
def gregory_endpoint_weights(order: int = 6) -> np.ndarray:
    """Weights (in units of the spacing) for the first ``order + 1`` points of a half-line rule.

    Combined with unit weights further out, this is the trapezoid rule plus
    Gregory's forward-difference end corrections up to ``order``.
    """
    if not 1 <= order <= len(_GREGORY):
        raise ValueError(f"order must be in 1..{len(_GREGORY)}")
    w = [Fraction(1)] * (order + 1)
    w[0] -= Fraction(1, 2)
    for k in range(1, order + 1):
        g = _GREGORY[k - 1] * (-1) ** (k - 1)
        for j in range(k + 1):
            w[j] += g * (-1) ** (k - j) * comb(k, j)
    return np.array([float(x) for x in w])


def half_line_weights(backend: GridBackend, order: int = 6) -> np.ndarray:
    k0 = backend.zero_index
    if k0 is None:
        raise ValueError("grid must contain p = 0 for a half-line state")
    w = np.zeros(backend.points)
    w[k0:] = backend.spacing
    w[k0 : k0 + order + 1] = backend.spacing * gregory_endpoint_weights(order)
    return w


def resource_qumode(s: float, backend: FockBackend | GridBackend, cut: int | None = None):
    """Resource state on a backend.

    ``cut=None`` requests the ideal (untruncated) resource. On the grid this
    is the exact half-Gaussian with end-corrected quadrature weights; on the
    Fock backend it is the expansion truncated at the backend's own cut.
    """
    if isinstance(backend, GridBackend):
        if cut is None:
            return GridQumode(backend, half_gaussian(s, backend.momenta), half_line_weights(backend))
        res = build_resource(s, cut)
        return GridQumode(backend, res.momentum_wavefunction(backend.momenta))
    if cut is None or cut >= backend.cut:
        return FockQumode(backend, build_resource(s, backend.cut).fock_coefficients)
    amps = np.zeros(backend.dim, dtype=complex)
    amps[: cut + 1] = build_resource(s, cut).fock_coefficients
    return FockQumode(backend, amps)


@dataclass(frozen=True)
class ProjectionKernel:
    """The finite-squeezed zero-position state |q=0,s>."""

    s: float

    def __post_init__(self):
        if self.s <= 0:
            raise ValueError("squeezing factor must be positive")

    def grid_values(self, p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        return self.s**-0.5 * pi**-0.25 * np.exp(-p * p / (2 * self.s * self.s))

    def fock_coefficients(self, cut: int) -> np.ndarray:
        """<n|q=0,s> for n = 0..cut (not renormalized)."""
        return _kernel_raw(float(self.s), int(cut)).copy()


def analytic_amplitude(energy, s: float):
    """Closed-form projected amplitude f_s(E) = <q=0,s| exp(-i E p) |R,s>.

    f_s(E) = (sqrt(2)/2) exp(-E^2 s^2 / 4) [1 - i Erfi(E s / 2)], evaluated as
    (sqrt(2)/2) [exp(-x^2) - (2i/sqrt(pi)) Dawson(x)] with x = E s / 2 so that
    nothing overflows for large E s.
    """
    x = 0.5 * np.asarray(energy, dtype=float) * s
    return (sqrt(2.0) / 2.0) * (np.exp(-x * x) - 2j / sqrt(pi) * special.dawsn(x))


@dataclass(frozen=True)
class ProjectionResult:
    ok: bool
    success_probability: float
    qubit_state: np.ndarray | None
    residue: np.ndarray
    state: HybridState | None


def apply_projection(state: HybridState, kernel: ProjectionKernel) -> ProjectionResult:
    """Post-select the qumode on |q=0,s>.

    The residue <q=0,s|state> is returned unnormalized alongside the
    normalized qubit state. A zero residue yields ``ok=False`` rather than an
    exception.
    """
    backend = state.backend
    if isinstance(backend, GridBackend):
        weights = state.weights * kernel.grid_values(backend.momenta)
        residue = state.amplitudes @ weights
    elif isinstance(backend, FockBackend):
        residue = state.amplitudes @ np.conj(kernel.fock_coefficients(backend.cut))
    else:
        raise ValueError("state has no qumode to project")
    total = state.norm_squared()
    prob = float(np.vdot(residue, residue).real) / total if total > 0 else 0.0
    if not prob > 0.0:
        return ProjectionResult(False, 0.0, None, residue, None)
    collapsed = HybridState(
        state.qubit_count, None, residue[:, None] / np.sqrt(total), norm_tracking=state.norm_tracking * np.sqrt(prob)
    )
    qubits, _ = qubit_marginal(collapsed)
    return ProjectionResult(True, prob, qubits, residue, collapsed)


# --- preparation by displacements and creations -------------------------------

@dataclass(frozen=True)
class PreparationResult:
    alphas: np.ndarray
    target: SqueezedResource
    state: np.ndarray
    fidelity: float
    truncated_fidelity: float
    simulation_cut: int


@functools.lru_cache(maxsize=256)
def _displacement(alpha: complex, cut: int) -> np.ndarray:
    a = annihilation_operator(cut)
    return linalg.expm(alpha * a.conj().T - np.conj(alpha) * a)


def displacement_parameters(coefficients: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Roots alpha of sum_n c_n/sqrt(n!) (alpha*)^n = 0, ordered by |alpha|.

    The roots are the companion-matrix eigenvalues (``numpy.roots``).
    """
    c = np.asarray(coefficients, dtype=complex)
    nz = np.nonzero(np.abs(c) > 0)[0]
    if nz.size == 0:
        raise PreparationError("all coefficients vanish", float("inf"))
    degree = int(nz[-1])
    poly = np.array([c[n] / sqrt(factorial(n)) for n in range(degree + 1)])
    roots = np.roots(poly[::-1]) if degree else np.array([], dtype=complex)
    if roots.size != degree:
        raise PreparationError(f"found {roots.size} roots for degree {degree}", float("inf"))
    if degree:
        scale = np.sum(np.abs(poly[None, :]) * np.abs(roots[:, None]) ** np.arange(degree + 1)[None, :], axis=1)
        resid = np.abs(np.polyval(poly[::-1], roots)) / np.where(scale > 0, scale, 1.0)
        if np.max(resid) > tol:
            raise PreparationError("inaccurate displacement root", float(np.max(resid)))
    roots = roots[np.argsort(np.abs(roots), kind="stable")]
    return np.conj(roots)


def prepare_by_displacements(target: SqueezedResource, simulation_cut: int | None = None) -> PreparationResult:
    """Simulate prod_n D(alpha_n) a^dag D(alpha_n)^dag |0> for the target's coefficients.

    The stages commute exactly (each equals a^dag - alpha_n*), so they are
    applied in order of increasing |alpha|. ``fidelity`` compares with the
    untruncated |R,s>; ``truncated_fidelity`` with the renormalized target.
    """
    if target.cut > MAX_PREPARATION_CUT:
        raise ValueError(f"cut {target.cut} exceeds preparation limit {MAX_PREPARATION_CUT}")
    alphas = displacement_parameters(target.fock_coefficients)
    if simulation_cut is None:
        simulation_cut = target.cut + 40 + int(np.ceil(4 * np.max(np.abs(alphas), initial=0.0) ** 2))
    a_dag = annihilation_operator(simulation_cut).conj().T
    psi = np.zeros(simulation_cut + 1, dtype=complex)
    psi[0] = 1.0
    for alpha in alphas:
        d = _displacement(complex(alpha), simulation_cut)
        psi = d @ (a_dag @ (d.conj().T @ psi))
        psi /= np.linalg.norm(psi)
    reference = build_resource(target.s, simulation_cut).raw_coefficients
    truncated = np.zeros_like(psi)
    truncated[: target.cut + 1] = target.fock_coefficients
    return PreparationResult(
        alphas=alphas,
        target=target,
        state=psi,
        fidelity=float(abs(np.vdot(reference, psi)) ** 2),
        truncated_fidelity=float(abs(np.vdot(truncated, psi)) ** 2),
        simulation_cut=simulation_cut,
    )
