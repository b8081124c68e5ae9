"""Pauli-string Hamiltonians and the benchmark models.

A Hamiltonian is stored as a weighted sum of Pauli strings plus a constant
energy shift,

    H = sum_l c_l h_l + shift * I,

with ``h_l`` a tensor product of single-qubit Paulis. Qubit 0 is the
leftmost letter of a string and the most significant bit of a basis index,
so ``PauliString("ZI").matrix() == kron(Z, I)``.
"""

from __future__ import annotations

import csv
import functools
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

DENSE_LIMIT = 12
BOND_TOLERANCE = 1e-6

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class DenseLimitError(ValueError):
    """Raised when a dense representation would exceed the qubit limit."""


class BondDistanceError(LookupError):
    """Raised when a bond distance is missing from a coefficient table."""


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Paulis, e.g. ``PauliString("XIZ")``."""

    letters: str

    def __post_init__(self):
        letters = self.letters.upper()
        if not letters:
            raise ValueError("a Pauli string needs at least one qubit")
        bad = set(letters) - set(_PAULI)
        if bad:
            raise ValueError(f"invalid Pauli letters {sorted(bad)} in {self.letters!r}")
        object.__setattr__(self, "letters", letters)

    @classmethod
    def from_sites(cls, qubit_count: int, sites: Mapping[int, str]) -> "PauliString":
        """Build a string that is the identity except on ``sites``."""
        letters = ["I"] * qubit_count
        for q, letter in sites.items():
            if not 0 <= q < qubit_count:
                raise ValueError(f"qubit {q} out of range for {qubit_count} qubits")
            letters[q] = letter
        return cls("".join(letters))

    @property
    def qubit_count(self) -> int:
        return len(self.letters)

    @property
    def support(self) -> tuple[int, ...]:
        """Indices of the non-identity letters."""
        return tuple(q for q, c in enumerate(self.letters) if c != "I")

    @property
    def is_identity(self) -> bool:
        return not self.support

    def matrix(self) -> np.ndarray:
        out = np.ones((1, 1), dtype=complex)
        for letter in self.letters:
            out = np.kron(out, _PAULI[letter])
        return out

    @functools.cached_property
    def _masks(self) -> tuple[int, int, complex]:
        n = self.qubit_count
        xmask = zmask = 0
        ny = 0
        for q, letter in enumerate(self.letters):
            bit = 1 << (n - 1 - q)
            if letter in "XY":
                xmask |= bit
            if letter in "ZY":
                zmask |= bit
            ny += letter == "Y"
        return xmask, zmask, 1j**ny

    def apply(self, vec: np.ndarray) -> np.ndarray:
        """Apply the string to a state vector (or to the leading axis of an array).

        Uses P|x> = i^{#Y} (-1)^{popcount(x & zmask)} |x ^ xmask> instead of
        building the dense matrix.
        """
        xmask, zmask, phase = self._masks
        idx = np.arange(1 << self.qubit_count)
        signs = 1.0 - 2.0 * (_popcount(idx & zmask) & 1)
        out = np.empty_like(vec, dtype=complex)
        shape = (-1,) + (1,) * (vec.ndim - 1)
        out[idx ^ xmask] = phase * signs.reshape(shape) * vec
        return out

    def __str__(self) -> str:
        return self.letters


def _popcount(a: np.ndarray) -> np.ndarray:
    a = a.copy()
    count = np.zeros_like(a)
    while np.any(a):
        count += a & 1
        a >>= 1
    return count


@dataclass(frozen=True)
class LocalHamiltonian:
    """Weighted sum of Pauli strings plus an energy shift.

    Parameters
    ----------
    terms : sequence of (coefficient, PauliString)
        Real coefficients in energy units. All strings share one qubit count.
    shift : float
        Constant added as ``shift * I``. Used to make every eigenvalue
        positive and to choose which eigenvalue has the smallest magnitude.
    qubit_count : int, optional
        Required only when ``terms`` is empty.
    """

    terms: tuple[tuple[float, PauliString], ...]
    shift: float = 0.0
    qubit_count: int = field(default=0)

    def __post_init__(self):
        terms = tuple((float(c), p if isinstance(p, PauliString) else PauliString(p)) for c, p in self.terms)
        counts = {p.qubit_count for _, p in terms}
        if len(counts) > 1:
            raise ValueError(f"terms act on different qubit counts: {sorted(counts)}")
        n = counts.pop() if counts else self.qubit_count
        if self.qubit_count and n != self.qubit_count:
            raise ValueError(f"qubit_count={self.qubit_count} disagrees with terms ({n})")
        if n < 1:
            raise ValueError("qubit_count must be given for a Hamiltonian without terms")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "shift", float(self.shift))
        object.__setattr__(self, "qubit_count", n)

    @classmethod
    def from_dict(cls, terms: Mapping[str, float], shift: float = 0.0) -> "LocalHamiltonian":
        return cls(tuple((c, PauliString(p)) for p, c in terms.items()), shift)

    @property
    def term_count(self) -> int:
        return len(self.terms)

    @property
    def dimension(self) -> int:
        return 1 << self.qubit_count

    @property
    def c_max(self) -> float:
        return max((abs(c) for c, _ in self.terms), default=0.0)

    @property
    def identity_coefficient(self) -> float:
        """Total weight on the identity: identity terms plus the shift."""
        return self.shift + sum(c for c, p in self.terms if p.is_identity)

    def with_shift(self, shift: float) -> "LocalHamiltonian":
        return LocalHamiltonian(self.terms, shift, self.qubit_count)

    def unshifted(self) -> "LocalHamiltonian":
        return self.with_shift(0.0)

    def matrix(self, dense_limit: int = DENSE_LIMIT) -> np.ndarray:
        """Dense matrix including the shift."""
        if self.qubit_count > dense_limit:
            raise DenseLimitError(f"{self.qubit_count} qubits exceeds dense limit {dense_limit}")
        m = self.shift * np.eye(self.dimension, dtype=complex)
        for c, p in self.terms:
            m += c * p.matrix()
        return m

    def apply(self, vec: np.ndarray) -> np.ndarray:
        out = self.shift * np.asarray(vec, dtype=complex)
        for c, p in self.terms:
            out = out + c * p.apply(vec)
        return out

    def __str__(self) -> str:
        parts = [f"{c:+.6g}*{p}" for c, p in self.terms]
        if self.shift:
            parts.append(f"{self.shift:+.6g}*shift")
        return " ".join(parts) or "0"


@dataclass(frozen=True)
class Spectrum:
    """Ascending eigenvalues and matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def ground_energy(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def ground_state(self) -> np.ndarray:
        return self.eigenvectors[:, 0]

    def eigenspace(self, index: int = 0, tol: float = 1e-9) -> np.ndarray:
        """Columns spanning the eigenspace degenerate with eigenvalue ``index``."""
        mask = np.abs(self.eigenvalues - self.eigenvalues[index]) < tol
        return self.eigenvectors[:, mask]


def diagonalize(h: LocalHamiltonian, dense_limit: int = DENSE_LIMIT) -> Spectrum:
    """Full spectrum of the shifted dense matrix."""
    vals, vecs = np.linalg.eigh(h.matrix(dense_limit))
    return Spectrum(vals, vecs)


def validate_shift(h: LocalHamiltonian) -> bool:
    """True iff every eigenvalue of the shifted Hamiltonian is strictly positive."""
    return bool(diagonalize(h).eigenvalues[0] > 0)


def expectation(h: LocalHamiltonian, state: np.ndarray, norm_tol: float = 1e-8) -> float:
    """Energy sum_l c_l <psi|h_l|psi> + shift of a normalized state."""
    state = np.asarray(state, dtype=complex)
    if state.shape != (h.dimension,):
        raise ValueError(f"state has shape {state.shape}, expected ({h.dimension},)")
    norm = np.vdot(state, state).real
    if abs(norm - 1.0) > norm_tol:
        raise ValueError(f"state is not normalized (norm^2 = {norm:.12g})")
    value = h.shift * norm
    for c, p in h.terms:
        value += c * np.vdot(state, p.apply(state))
    if abs(value.imag) > 1e-10:
        raise ArithmeticError(f"expectation has imaginary part {value.imag:.3g}")
    return float(value.real)


# --- benchmark models -------------------------------------------------------

@dataclass(frozen=True)
class H2CoefficientTable:
    """Bond distance (Angstrom) -> coefficients (c0..c5) of the two-qubit H2 model."""

    rows: tuple[tuple[float, tuple[float, ...]], ...]

    @property
    def distances(self) -> list[float]:
        return [r for r, _ in self.rows]

    def lookup(self, bond_distance: float) -> tuple[float, ...]:
        for r, coeffs in self.rows:
            if abs(r - bond_distance) <= BOND_TOLERANCE:
                return coeffs
        nearest = sorted(self.distances, key=lambda r: abs(r - bond_distance))[:3]
        raise BondDistanceError(
            f"bond distance {bond_distance} A not in table; nearest available: {nearest}"
        )


H2_COLUMNS = ("bond_angstrom", "c0", "c1", "c2", "c3", "c4", "c5")


def load_h2_table(path: str | os.PathLike | None = None) -> H2CoefficientTable:
    """Read the H2 coefficient CSV.

    Without ``path`` the file ``h2_coefficients.csv`` is taken from the
    directory in ``$QUIPI_DATA_DIR`` if set, otherwise from the bundled data.
    Lines starting with ``#`` are comments.
    """
    if path is None:
        data_dir = os.environ.get("QUIPI_DATA_DIR")
        if data_dir:
            path = Path(data_dir) / "h2_coefficients.csv"
        else:
            path = resources.files("quipi") / "data" / "h2_coefficients.csv"
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.DictReader(lines)
    if tuple(reader.fieldnames or ()) != H2_COLUMNS:
        raise ValueError(f"{path}: expected header {','.join(H2_COLUMNS)}, got {reader.fieldnames}")
    rows = []
    for rec in reader:
        rows.append((float(rec["bond_angstrom"]), tuple(float(rec[f"c{i}"]) for i in range(6))))
    return H2CoefficientTable(tuple(rows))


def build_h2(
    bond_distance: float,
    coefficient_table: H2CoefficientTable | None = None,
    shift: float = 0.0,
) -> LocalHamiltonian:
    """c0 I + c1 Z1 + c2 Z2 + c3 Z1Z2 + c4 X1X2 + c5 Y1Y2 at the tabulated bond distance."""
    table = coefficient_table if coefficient_table is not None else load_h2_table()
    c = table.lookup(bond_distance)
    strings = ("II", "ZI", "IZ", "ZZ", "XX", "YY")
    return LocalHamiltonian(tuple((ci, PauliString(p)) for ci, p in zip(c, strings)), shift)


def build_tfim(
    site_count: int,
    fields: Sequence[float],
    couplings: np.ndarray | Sequence[Sequence[float]],
    shift: float = 0.0,
) -> LocalHamiltonian:
    """Transverse-field Ising model sum_i a_i X_i + sum_{i>j} J_ij Z_i Z_j.

    The coupling sum runs over all pairs (all-to-all); only the strictly
    lower triangle of ``couplings`` is read. Zero couplings are kept as terms
    so the term count is always N + N(N-1)/2.
    """
    if site_count < 1:
        raise ValueError("site_count must be >= 1")
    fields = np.asarray(fields, dtype=float)
    couplings = np.asarray(couplings, dtype=float)
    if fields.shape != (site_count,):
        raise ValueError(f"expected {site_count} fields, got shape {fields.shape}")
    if site_count > 1 and couplings.shape != (site_count, site_count):
        raise ValueError(f"couplings must be {site_count}x{site_count}, got {couplings.shape}")
    terms: list[tuple[float, PauliString]] = []
    for i in range(site_count):
        terms.append((fields[i], PauliString.from_sites(site_count, {i: "X"})))
    for i in range(site_count):
        for j in range(i):
            terms.append((couplings[i, j], PauliString.from_sites(site_count, {i: "Z", j: "Z"})))
    return LocalHamiltonian(tuple(terms), shift, site_count)


def random_tfim_parameters(site_count: int, seed: int = 42) -> tuple[np.ndarray, np.ndarray]:
    """Fields and a lower-triangular coupling matrix drawn from U[0, 1]."""
    rng = np.random.default_rng(seed)
    fields = rng.uniform(0.0, 1.0, site_count)
    couplings = np.tril(rng.uniform(0.0, 1.0, (site_count, site_count)), -1)
    return fields, couplings


def build_kitaev_ring(site_count: int, hopping: float, field: float, shift: float = 0.0) -> LocalHamiltonian:
    """Jordan-Wigner spin form of the Kitaev ring.

    -h sum_i Z_i - J sum_{i<N} X_i X_{i+1} - J Y_1 (prod_{1<i<N} Z_i) Y_N
    """
    n = site_count
    if n < 2:
        raise ValueError("the Kitaev ring needs at least 2 sites")
    terms: list[tuple[float, PauliString]] = []
    for i in range(n):
        terms.append((-field, PauliString.from_sites(n, {i: "Z"})))
    for i in range(n - 1):
        terms.append((-hopping, PauliString.from_sites(n, {i: "X", i + 1: "X"})))
    boundary = {0: "Y", n - 1: "Y"}
    boundary.update({i: "Z" for i in range(1, n - 1)})
    terms.append((-hopping, PauliString.from_sites(n, boundary)))
    return LocalHamiltonian(tuple(terms), shift, n)


def basis_state(bits: str) -> np.ndarray:
    """Computational basis vector for a bit string such as ``"01"``."""
    v = np.zeros(1 << len(bits), dtype=complex)
    v[int(bits, 2)] = 1.0
    return v


def product_state(single: np.ndarray, n: int) -> np.ndarray:
    out = np.ones(1, dtype=complex)
    for _ in range(n):
        out = np.kron(out, single)
    return out


def shift_for_ratio(h: LocalHamiltonian, margin: float) -> float:
    """Shift that places the ground eigenvalue at ``margin`` above zero."""
    return -diagonalize(h.unshifted()).ground_energy + margin

