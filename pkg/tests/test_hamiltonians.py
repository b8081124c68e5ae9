import itertools
from functools import reduce

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from quipi.hamiltonians import (
    BondDistanceError,
    DenseLimitError,
    LocalHamiltonian,
    PauliString,
    build_h2,
    build_kitaev_ring,
    build_tfim,
    diagonalize,
    expectation,
    load_h2_table,
    random_tfim_parameters,
    validate_shift,
)
from reference_values import H2_075_EIGENVALUES, KITAEV3_LOWEST, TFIM3_RANDOM_LOWEST, TFIM3_UNIFORM_EIGENVALUES

SINGLE = {
    "I": np.eye(2),
    "X": np.array([[0, 1], [1, 0]]),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1, -1]),
}


def kron_oracle(letters):
    return reduce(np.kron, (SINGLE[c] for c in letters))


def all_strings(n):
    return ["".join(t) for t in itertools.product("IXYZ", repeat=n)]


pauli_strings = st.integers(1, 4).flatmap(lambda n: st.text("IXYZ", min_size=n, max_size=n))


def random_state(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


# --- Pauli strings ---------------------------------------------------------------


@pytest.mark.parametrize("n", [1, 2, 3])
def test_pauli_matrix_matches_kronecker_products_exhaustively(n):
    for letters in all_strings(n):
        np.testing.assert_array_equal(PauliString(letters).matrix(), kron_oracle(letters))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_pauli_apply_matches_dense_matrix_exhaustively(n):
    rng = np.random.default_rng(n)
    v = random_state(rng, 2**n)
    for letters in all_strings(n):
        np.testing.assert_allclose(PauliString(letters).apply(v), kron_oracle(letters) @ v, atol=1e-14)


@given(pauli_strings)
def test_pauli_matrix_is_hermitian_unitary_involutory(letters):
    m = PauliString(letters).matrix()
    eye = np.eye(m.shape[0])
    np.testing.assert_array_equal(m, m.conj().T)
    np.testing.assert_allclose(m @ m.conj().T, eye, atol=1e-14)
    np.testing.assert_allclose(m @ m, eye, atol=1e-14)


def test_pauli_apply_acts_on_leading_axis_of_a_batch():
    p = PauliString("XY")
    block = np.arange(8, dtype=complex).reshape(4, 2)
    np.testing.assert_allclose(p.apply(block), p.matrix() @ block)


def test_pauli_string_support_and_validation():
    p = PauliString.from_sites(4, {1: "x", 3: "Z"})
    assert p.letters == "IXIZ"
    assert p.support == (1, 3)
    assert not p.is_identity and PauliString("II").is_identity
    with pytest.raises(ValueError):
        PauliString("XQ")
    with pytest.raises(ValueError):
        PauliString("")
    with pytest.raises(ValueError):
        PauliString.from_sites(2, {2: "X"})


def test_qubit_zero_is_the_most_significant_bit():
    np.testing.assert_array_equal(PauliString("ZI").matrix(), np.kron(SINGLE["Z"], SINGLE["I"]))
    assert PauliString("XI").apply(np.eye(4)[0])[2] == 1


# --- LocalHamiltonian ------------------------------------------------------------


def test_mixed_qubit_counts_are_rejected():
    with pytest.raises(ValueError):
        LocalHamiltonian(((1.0, PauliString("X")), (1.0, PauliString("XX"))))


def test_empty_hamiltonian_needs_a_qubit_count():
    with pytest.raises(ValueError):
        LocalHamiltonian(())
    h = LocalHamiltonian((), shift=1.0, qubit_count=2)
    np.testing.assert_array_equal(h.matrix(), np.eye(4))


def test_dense_limit():
    h = LocalHamiltonian(((1.0, PauliString("Z" * 13)),))
    with pytest.raises(DenseLimitError):
        h.matrix()


def test_shift_and_identity_coefficient(h2):
    shifted = h2.with_shift(1.37)
    assert shifted.identity_coefficient == pytest.approx(0.2252 + 1.37)
    np.testing.assert_allclose(shifted.matrix() - h2.matrix(), 1.37 * np.eye(4))
    assert shifted.unshifted().shift == 0.0
    assert h2.c_max == pytest.approx(0.5716)


@given(st.lists(st.tuples(st.floats(-3, 3), st.text("IXYZ", min_size=3, max_size=3)), min_size=1, max_size=8), st.floats(-2, 2))
def test_apply_matches_dense_matrix(terms, shift):
    h = LocalHamiltonian(tuple(terms), shift)
    v = random_state(np.random.default_rng(0), 8)
    np.testing.assert_allclose(h.apply(v), h.matrix() @ v, atol=1e-12)
    m = h.matrix()
    assert np.max(np.abs(m - m.conj().T)) < 1e-12


@given(st.lists(st.tuples(st.floats(-3, 3), st.text("IXYZ", min_size=2, max_size=2)), min_size=1, max_size=6), st.integers(0, 2**32 - 1))
def test_expectation_lies_within_spectrum(terms, seed):
    h = LocalHamiltonian(tuple(terms))
    ev = diagonalize(h).eigenvalues
    e = expectation(h, random_state(np.random.default_rng(seed), 4))
    assert ev[0] - 1e-12 <= e <= ev[-1] + 1e-12


# --- models ----------------------------------------------------------------------


def test_h2_spectrum_at_equilibrium(h2):
    ev = diagonalize(h2).eigenvalues
    np.testing.assert_allclose(ev, H2_075_EIGENVALUES, atol=1e-12)
    assert ev[0] == pytest.approx(-1.15, abs=5e-3)
    assert ev[1] == pytest.approx(0.45, abs=5e-3)


def test_h2_shift_gives_ratio_eight():
    ev = diagonalize(build_h2(0.75, shift=1.37)).eigenvalues
    assert ev[1] / ev[0] == pytest.approx(8.0, rel=0.02)


def test_h2_identity_table(tmp_path):
    path = tmp_path / "h2.csv"
    path.write_text("# identity only\nbond_angstrom,c0,c1,c2,c3,c4,c5\n1.0,1,0,0,0,0,0\n")
    h = build_h2(1.0, load_h2_table(path))
    spec = diagonalize(h)
    np.testing.assert_allclose(spec.eigenvalues, 1.0)
    np.testing.assert_allclose(np.abs(spec.eigenvectors), np.eye(4))


def test_h2_missing_distance_names_nearest():
    with pytest.raises(BondDistanceError, match="0.75"):
        build_h2(0.8)
    with pytest.raises(LookupError):
        build_h2(0.8)


def test_h2_table_from_environment(tmp_path, monkeypatch):
    (tmp_path / "h2_coefficients.csv").write_text("bond_angstrom,c0,c1,c2,c3,c4,c5\n2.0,0,1,0,0,0,0\n")
    monkeypatch.setenv("QUIPI_DATA_DIR", str(tmp_path))
    assert load_h2_table().distances == [2.0]


def test_h2_table_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("r,c0\n0.75,1\n")
    with pytest.raises(ValueError, match="header"):
        load_h2_table(path)


def test_tfim_uniform_matches_independent_eigensolve():
    h = build_tfim(3, [1, 1, 1], np.ones((3, 3)))
    np.testing.assert_allclose(diagonalize(h).eigenvalues, TFIM3_UNIFORM_EIGENVALUES, atol=1e-12)
    m = sum(kron_oracle(p.letters) * c for c, p in h.terms)
    np.testing.assert_allclose(diagonalize(h).eigenvalues, np.linalg.eigvalsh(m), atol=1e-12)


def test_tfim_single_site():
    h = build_tfim(1, [1.0], np.zeros((1, 1)))
    np.testing.assert_allclose(diagonalize(h).eigenvalues, [-1, 1])


def test_tfim_random_seed_42():
    h = build_tfim(3, *random_tfim_parameters(3, 42))
    np.testing.assert_allclose(diagonalize(h).eigenvalues[:2], TFIM3_RANDOM_LOWEST, atol=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_tfim_term_count(n):
    assert build_tfim(n, np.ones(n), np.ones((n, n))).term_count == n + n * (n - 1) // 2


def test_tfim_dimension_mismatch():
    with pytest.raises(ValueError):
        build_tfim(3, [1, 1], np.ones((3, 3)))
    with pytest.raises(ValueError):
        build_tfim(3, [1, 1, 1], np.ones((2, 2)))


def test_tfim_reads_only_lower_triangle():
    j = np.tril(np.full((3, 3), 0.5), -1)
    a = build_tfim(3, np.ones(3), j)
    b = build_tfim(3, np.ones(3), j + np.triu(np.full((3, 3), 9.0)))
    np.testing.assert_array_equal(a.matrix(), b.matrix())


@pytest.mark.parametrize("n", [2, 3, 4, 6])
def test_kitaev_term_count(n):
    assert build_kitaev_ring(n, 1.0, 0.3).term_count == 2 * n


def test_kitaev_decoupled_fields():
    ev = diagonalize(build_kitaev_ring(3, 0.0, 0.7)).eigenvalues
    assert ev[0] == pytest.approx(-3 * 0.7)


def test_kitaev_reference_point():
    h = build_kitaev_ring(3, 1.0, 0.5)
    np.testing.assert_allclose(diagonalize(h).eigenvalues[:2], KITAEV3_LOWEST, atol=1e-12)
    assert str(h.terms[-1][1]) == "YZY"


def test_kitaev_needs_two_sites():
    with pytest.raises(ValueError):
        build_kitaev_ring(1, 1.0, 1.0)


@pytest.mark.parametrize(
    "h",
    [build_h2(0.75), build_tfim(3, np.ones(3), np.ones((3, 3))), build_kitaev_ring(3, 1.0, 0.5)],
    ids=["h2", "tfim", "kitaev"],
)
def test_models_are_hermitian_and_eigenpairs_hold(h):
    m = h.matrix()
    assert np.max(np.abs(m - m.conj().T)) < 1e-12
    spec = diagonalize(h)
    assert np.all(np.diff(spec.eigenvalues) >= 0)
    resid = m @ spec.eigenvectors - spec.eigenvectors * spec.eigenvalues
    assert np.max(np.linalg.norm(resid, axis=0)) < 1e-10


# --- shift validation and expectation ---------------------------------------------


def test_validate_shift():
    z = LocalHamiltonian(((1.0, PauliString("Z")),))
    assert validate_shift(z.with_shift(2.0))
    assert not validate_shift(z.with_shift(0.5))
    assert validate_shift(build_h2(0.75, shift=1.37))


def test_expectation_examples(h2, singlet):
    spec = diagonalize(h2)
    assert expectation(h2, spec.ground_state) == pytest.approx(spec.ground_energy, abs=1e-10)
    x = LocalHamiltonian(((1.0, PauliString("X")),))
    assert expectation(x, np.array([1, 0])) == 0.0
    assert expectation(h2, singlet) == pytest.approx(np.vdot(singlet, h2.matrix() @ singlet).real, abs=1e-14)


def test_expectation_rejects_bad_states(h2):
    with pytest.raises(ValueError, match="shape"):
        expectation(h2, np.ones(2) / np.sqrt(2))
    with pytest.raises(ValueError, match="normalized"):
        expectation(h2, np.ones(4))


def test_eigenspace_collects_degenerate_levels():
    spec = diagonalize(build_tfim(3, [1, 1, 1], np.ones((3, 3))))
    assert spec.eigenspace(1).shape == (8, 2)
    assert spec.eigenspace(3).shape == (8, 3)
