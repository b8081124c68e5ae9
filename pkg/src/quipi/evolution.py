"""Coupled evolution exp(-i H (x) p): exact, first-order Trotter, and gate circuits.

Gate set (qubit indices are 0-based):

    H q        Hadamard
    S q        phase gate diag(1, i)
    SDG q      S^dagger
    CNOT c t   controlled-NOT
    HXP q th   exp(-i th X_q (x) p)      hybrid qubit-qumode gate
    QP th      exp(-i th p)              qumode-only gate (identity terms)

A Pauli term c*P is compiled as W^dag, a CNOT fan-out from the highest active
qubit, HXP on that qubit, the inverse fan-out, then W, where W maps X to each
letter (H for Z, S for Y).
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .hamiltonians import LocalHamiltonian, diagonalize
from .hilbert import FockBackend, GridBackend, HybridState, momentum_operator

DENSE_DIM_LIMIT = 4096

_ARITY = {"H": 1, "S": 1, "SDG": 1, "CNOT": 2, "HXP": 1, "QP": 0}
_HAS_THETA = {"HXP", "QP"}
_SQ = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "S": np.diag([1, 1j]),
    "SDG": np.diag([1, -1j]),
}


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...] = ()
    theta: float = 0.0

    def __post_init__(self):
        if self.kind not in _ARITY:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if len(self.qubits) != _ARITY[self.kind]:
            raise ValueError(f"{self.kind} acts on {_ARITY[self.kind]} qubit(s), got {self.qubits}")
        if self.kind == "CNOT" and self.qubits[0] == self.qubits[1]:
            raise ValueError("CNOT control and target must differ")
        if not np.isfinite(self.theta):
            raise ValueError("gate angle must be finite")

    def to_text(self) -> str:
        parts = [self.kind, *map(str, self.qubits)]
        if self.kind in _HAS_THETA:
            parts.append(repr(float(self.theta)))
        return " ".join(parts)


@dataclass(frozen=True)
class Circuit:
    qubit_count: int
    gates: tuple[Gate, ...] = ()
    trotter_steps: int = 1

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if any(q >= self.qubit_count or q < 0 for q in g.qubits):
                raise ValueError(f"gate {g.to_text()} out of range for {self.qubit_count} qubits")

    def __len__(self) -> int:
        return len(self.gates)

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for g in self.gates:
            out[g.kind] = out.get(g.kind, 0) + 1
        return out

    def to_text(self) -> str:
        head = f"# qubits {self.qubit_count} trotter_steps {self.trotter_steps}"
        return "\n".join([head, *(g.to_text() for g in self.gates)]) + "\n"

    @classmethod
    def from_text(cls, text: str, qubit_count: int | None = None) -> "Circuit":
        gates = []
        steps = 1
        for line in text.splitlines():
            line = line.strip()
            if line.startswith("#"):
                tok = line[1:].split()
                if "qubits" in tok and qubit_count is None:
                    qubit_count = int(tok[tok.index("qubits") + 1])
                if "trotter_steps" in tok:
                    steps = int(tok[tok.index("trotter_steps") + 1])
                continue
            if not line:
                continue
            tok = line.split()
            kind = tok[0].upper()
            if kind not in _ARITY:
                raise ValueError(f"unknown gate in line {line!r}")
            nq = _ARITY[kind]
            qubits = tuple(int(t) for t in tok[1 : 1 + nq])
            theta = float(tok[1 + nq]) if kind in _HAS_THETA else 0.0
            gates.append(Gate(kind, qubits, theta))
        if qubit_count is None:
            qubit_count = 1 + max((q for g in gates for q in g.qubits), default=0)
        return cls(qubit_count, tuple(gates), steps)


# --- compilation ---------------------------------------------------------------

def term_gates(letters: str, theta: float) -> list[Gate]:
    """Gates for exp(-i theta P (x) p) with P given by ``letters``; P must not be the identity."""
    active = [q for q, c in enumerate(letters) if c != "I"]
    if not active:
        raise ValueError("identity strings compile to a QP gate")
    pivot = active[-1]
    pre = []
    post = []
    for q in active:
        if letters[q] == "Z":
            pre.append(Gate("H", (q,)))
            post.append(Gate("H", (q,)))
        elif letters[q] == "Y":
            pre.append(Gate("SDG", (q,)))
            post.append(Gate("S", (q,)))
    fan = [Gate("CNOT", (pivot, q)) for q in active[:-1]]
    return pre + fan + [Gate("HXP", (pivot,), theta)] + fan[::-1] + post


def compile_trotter(h: LocalHamiltonian, n: int) -> Circuit:
    """First-order product formula (prod_l exp(-i c_l h_l p / n))^n as gates.

    Identity strings and the shift are merged into one QP gate per step.
    """
    if n < 1:
        raise ValueError("Trotter number must be >= 1")
    if h.term_count == 0:
        raise ValueError("cannot compile a Hamiltonian with zero terms")
    step: list[Gate] = []
    ident = h.identity_coefficient
    if ident != 0.0:
        step.append(Gate("QP", (), ident / n))
    for c, p in h.terms:
        if not p.is_identity:
            step.extend(term_gates(p.letters, c / n))
    return Circuit(h.qubit_count, tuple(step) * n, n)


# --- simulation ----------------------------------------------------------------

@functools.lru_cache(maxsize=32)
def momentum_spectrum(cut: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and eigenvectors of the truncated momentum operator."""
    return np.linalg.eigh(momentum_operator(cut))


@functools.lru_cache(maxsize=4096)
def _fock_phase_gate(theta_bits: float, cut: int) -> np.ndarray:
    lam, v = momentum_spectrum(cut)
    return (v * np.exp(-1j * theta_bits * lam)) @ v.conj().T


def qumode_phase(backend, theta: float) -> np.ndarray:
    """exp(-i theta p) on the backend: a vector on the grid, a matrix on Fock.

    Fock matrices are cached on the exact float value of theta and the cut.
    """
    if isinstance(backend, GridBackend):
        return np.exp(-1j * theta * backend.momenta)
    return _fock_phase_gate(float(theta), backend.cut)


def _apply_qumode(amps: np.ndarray, op: np.ndarray) -> np.ndarray:
    # op acts on the trailing qumode axis
    if op.ndim == 1:
        return amps * op
    return amps @ op.T


def _check_dims(state: HybridState, n: int):
    if state.qubit_count != n:
        raise ValueError(f"state has {state.qubit_count} qubits, operator needs {n}")
    if state.backend is None:
        raise ValueError("state has no qumode")


def evolve_exact(state: HybridState, h: LocalHamiltonian, dense_limit: int = DENSE_DIM_LIMIT) -> HybridState:
    """Apply exp(-i H (x) p) exactly.

    H is diagonalized; each eigencomponent E then picks up exp(-i E p), a
    pointwise phase on the grid and exp(-i E p_trunc) on the Fock backend
    (identical to the dense exponential of the truncated H (x) p).
    """
    _check_dims(state, h.qubit_count)
    spec = diagonalize(h)
    w, energies = spec.eigenvectors, spec.eigenvalues
    coeffs = w.conj().T @ state.amplitudes
    backend = state.backend
    if isinstance(backend, GridBackend):
        coeffs = coeffs * np.exp(-1j * np.outer(energies, backend.momenta))
    else:
        total = h.dimension * backend.dim
        if total > dense_limit:
            raise ValueError(f"dense exponential dimension {total} exceeds limit {dense_limit}")
        lam, v = momentum_spectrum(backend.cut)
        coeffs = ((coeffs @ v.conj()) * np.exp(-1j * np.outer(energies, lam))) @ v.T
    return state.with_amplitudes(w @ coeffs)


def _apply_gate(t: np.ndarray, gate: Gate, n: int, backend) -> np.ndarray:
    """Apply one gate to the amplitude tensor of shape (2,)*n + (D,)."""
    k = gate.kind
    if k in _SQ:
        q = gate.qubits[0]
        return np.moveaxis(np.tensordot(_SQ[k], t, axes=([1], [q])), 0, q)
    if k == "CNOT":
        c, tq = gate.qubits
        t = t.copy()
        idx1 = [slice(None)] * (n + 1)
        idx1[c] = 1
        sub = t[tuple(idx1)]
        axis = tq - (tq > c)
        t[tuple(idx1)] = np.flip(sub, axis=axis)
        return t
    if k == "QP":
        return _apply_qumode(t, qumode_phase(backend, gate.theta))
    if k == "HXP":
        q = gate.qubits[0]
        t0 = np.take(t, 0, axis=q)
        t1 = np.take(t, 1, axis=q)
        plus = _apply_qumode((t0 + t1) / np.sqrt(2), qumode_phase(backend, gate.theta))
        minus = _apply_qumode((t0 - t1) / np.sqrt(2), qumode_phase(backend, -gate.theta))
        return np.stack([(plus + minus) / np.sqrt(2), (plus - minus) / np.sqrt(2)], axis=q)
    raise ValueError(f"unsupported gate {k}")


def run_circuit(state: HybridState, circuit: Circuit) -> HybridState:
    """Apply the gates of ``circuit`` in order."""
    _check_dims(state, circuit.qubit_count)
    n = circuit.qubit_count
    t = state.amplitudes.reshape((2,) * n + (state.backend.dim,))
    for g in circuit.gates:
        t = _apply_gate(t, g, n, state.backend)
    return state.with_amplitudes(t.reshape(1 << n, -1))


def gates_matrix(gates: Iterable[Gate], qubit_count: int, cut: int) -> np.ndarray:
    """Dense matrix of a gate sequence on the Fock backend, qubit-major ordering."""
    backend = FockBackend(cut)
    d = (1 << qubit_count) * backend.dim
    if d > DENSE_DIM_LIMIT:
        raise ValueError(f"circuit matrix dimension {d} exceeds limit {DENSE_DIM_LIMIT}")
    # columns are images of basis vectors; treat the column index as a batch axis
    t = np.eye(d, dtype=complex).reshape((2,) * qubit_count + (backend.dim, d))
    t = np.moveaxis(t, -1, 0)
    for g in gates:
        t = _batched(t, g, qubit_count, backend)
    return np.moveaxis(t, 0, -1).reshape(d, d)


def _batched(t: np.ndarray, gate: Gate, n: int, backend) -> np.ndarray:
    # shift qubit indices by one for the leading batch axis
    shifted = Gate(gate.kind, tuple(q + 1 for q in gate.qubits), gate.theta)
    return _apply_gate(t, shifted, n + 1, backend)


def circuit_matrix(circuit: Circuit, cut: int) -> np.ndarray:
    return gates_matrix(circuit.gates, circuit.qubit_count, cut)

