import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from quipi.hamiltonians import LocalHamiltonian, PauliString, build_h2, diagonalize, expectation
from quipi.solver import (
    REPORT_COLUMNS,
    QuipiConfig,
    ShiftError,
    finite_squeezing_oracle,
    oracle_inverse_iterate,
    parse_state,
    qee_energy,
    quipi_solve,
    subspace_fidelity,
    target_index,
)
from reference_values import CHEMICAL_ACCURACY, H2_075_EIGENVALUES


# --- configuration and state specs ------------------------------------------------


@pytest.mark.parametrize(
    "kwargs",
    [{"s": 0.0}, {"iterations": 0}, {"trotter_steps": -1}, {"shots": -1}, {"backend": "gpu"}, {"cut": -2}],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        QuipiConfig(**kwargs)


def test_parse_state_forms():
    np.testing.assert_allclose(parse_state("zero", 2), [1, 0, 0, 0])
    np.testing.assert_allclose(parse_state("plus", 1), [2**-0.5, 2**-0.5])
    np.testing.assert_allclose(parse_state("minus", 2), [0.5, -0.5, -0.5, 0.5])
    np.testing.assert_allclose(parse_state("10", 2), [0, 0, 1, 0])
    np.testing.assert_allclose(parse_state("01-10", 2), [0, 2**-0.5, -(2**-0.5), 0])
    np.testing.assert_allclose(parse_state(" 00 + 11 ", 2), [2**-0.5, 0, 0, 2**-0.5])


@pytest.mark.parametrize("spec", ["01-01", "012", "0", "abc", "01+"])
def test_parse_state_rejects(spec):
    with pytest.raises(ValueError):
        parse_state(spec, 2)


@given(st.lists(st.tuples(st.booleans(), st.integers(0, 7)), min_size=1, max_size=5))
def test_parse_state_signed_sums(terms):
    text = "".join(("-" if neg else "+") + format(i, "03b") for neg, i in terms)
    want = np.zeros(8)
    for neg, i in terms:
        want[i] += -1 if neg else 1
    if not want.any():
        with pytest.raises(ValueError):
            parse_state(text, 3)
        return
    np.testing.assert_allclose(parse_state(text, 3), want / np.linalg.norm(want))


# --- energy estimation ------------------------------------------------------------


def test_qee_exact_on_eigenvector(h2):
    spec = diagonalize(h2)
    for n in range(4):
        assert qee_energy(spec.eigenvectors[:, n], h2).value == pytest.approx(spec.eigenvalues[n], abs=1e-12)


def test_qee_deterministic_outcome():
    h = LocalHamiltonian(((0.7, PauliString("Z")),))
    for shots in (1, 10, 1000):
        est = qee_energy(np.array([1.0, 0.0]), h, shots, seed=3)
        assert est.value == 0.7 and est.stderr == 0.0


def test_qee_sampling_statistics(h2):
    ground = diagonalize(h2).ground_state
    exact = H2_075_EIGENVALUES[0]
    spread = []
    for shots in (10**3, 10**4, 10**5):
        ests = [qee_energy(ground, h2, shots, seed) for seed in range(60)]
        values = np.array([e.value for e in ests])
        errs = np.array([e.stderr for e in ests])
        assert np.mean(np.abs(values - exact) <= 3 * errs) >= 0.95
        spread.append(errs.mean())
    assert spread[0] / spread[1] == pytest.approx(np.sqrt(10), rel=0.1)
    assert spread[1] / spread[2] == pytest.approx(np.sqrt(10), rel=0.1)


def test_qee_is_reproducible_under_seed(h2, singlet):
    assert qee_energy(singlet, h2, 500, 9) == qee_energy(singlet, h2, 500, 9)


def test_qee_rejects_unnormalized_and_negative_shots(h2):
    with pytest.raises(ValueError):
        qee_energy(np.ones(4), h2)
    with pytest.raises(ValueError):
        qee_energy(np.eye(4)[0], h2, shots=-1)


# --- oracles ----------------------------------------------------------------------


def test_oracle_zero_power_returns_input(h2_shifted, singlet):
    np.testing.assert_allclose(oracle_inverse_iterate(h2_shifted, singlet, 0), singlet)


def test_oracle_converges_to_ground_state(h2_shifted, singlet, tfim_uniform, kitaev):
    for h, b in ((h2_shifted, singlet), (tfim_uniform, parse_state("minus", 3)), (kitaev, parse_state("plus", 3))):
        spec = diagonalize(h)
        v = oracle_inverse_iterate(h, b, 50)
        assert subspace_fidelity(spec.eigenspace(0), v) > 1 - 1e-10


def test_oracle_shift_check():
    h = build_h2(0.75)
    with pytest.raises(ShiftError):
        oracle_inverse_iterate(h, np.eye(4)[1], 1)
    v = oracle_inverse_iterate(h, np.eye(4)[1], 3, require_positive=False)
    assert abs(np.linalg.norm(v) - 1) < 1e-12


def test_finite_squeezing_oracle_success_probability(h2_shifted, singlet):
    _, p1 = finite_squeezing_oracle(h2_shifted, singlet, 10.0, 1)
    r = quipi_solve(h2_shifted, QuipiConfig(s=10.0, cut=None, iterations=1), singlet)
    assert r.final.success_probability == pytest.approx(p1, rel=1e-9)


def test_target_index_is_smallest_magnitude():
    h = build_h2(0.75, shift=-0.6)
    spec = diagonalize(h)
    assert spec.eigenvalues[target_index(spec)] == pytest.approx(0.7056 - 0.6)


# --- the iteration ----------------------------------------------------------------


def test_h2_reaches_chemical_accuracy(h2_shifted, singlet):
    r = quipi_solve(h2_shifted, QuipiConfig(s=10.0, cut=20, iterations=3), singlet)
    assert r.final.energy_error < CHEMICAL_ACCURACY
    assert r.target_energy == pytest.approx(H2_075_EIGENVALUES[0], abs=1e-12)
    assert r.initial_energy == pytest.approx(expectation(build_h2(0.75), singlet), abs=1e-12)


def test_reports_match_closed_form_oracle(h2_shifted, singlet):
    r = quipi_solve(h2_shifted, QuipiConfig(s=5.0, cut=None, iterations=4), singlet)
    for rep in r.reports:
        v, p = finite_squeezing_oracle(h2_shifted, singlet, 5.0, rep.k)
        assert rep.energy == pytest.approx(expectation(h2_shifted, v) - h2_shifted.shift, abs=1e-9)
        assert rep.success_probability == pytest.approx(p, rel=1e-8)


def test_bookkeeping(h2_shifted, singlet):
    r = quipi_solve(h2_shifted, QuipiConfig(iterations=5), singlet)
    probs = [x.success_probability for x in r.reports]
    cum = [x.cumulative_success for x in r.reports]
    assert all(0 < p <= 1 for p in probs)
    np.testing.assert_allclose(cum, np.cumprod(probs), rtol=1e-12)
    assert all(a >= b for a, b in zip(cum, cum[1:]))
    fid = [x.ground_fidelity for x in r.reports]
    assert all(b >= a - 1e-12 for a, b in zip(fid, fid[1:]))
    assert [x.k for x in r.reports] == [1, 2, 3, 4, 5]


@pytest.mark.parametrize("backend", ["grid", "fock"])
def test_eigenvector_is_a_fixed_point(backend, h2_shifted):
    spec = diagonalize(h2_shifted)
    cfg = QuipiConfig(s=5.0, cut=20, iterations=3, backend=backend, fock_cut=40)
    for n in range(4):
        v = spec.eigenvectors[:, n]
        r = quipi_solve(h2_shifted, cfg, v, require_positive=False)
        assert abs(np.vdot(v, r.state)) ** 2 > 1 - 1e-8
        assert abs(r.final.energy - (spec.eigenvalues[n] - h2_shifted.shift)) < 1e-6


def test_ground_eigenvector_stays_exact(h2_shifted):
    ground = diagonalize(h2_shifted).ground_state
    r = quipi_solve(h2_shifted, QuipiConfig(iterations=3), ground)
    assert all(x.energy_error < 1e-6 for x in r.reports)


def test_excited_target_by_shift():
    # the shift leaves 0.7056 - 0.7 as the eigenvalue of smallest magnitude; high squeezing is
    # needed because the projected amplitude saturates at sqrt(2)/2 as E approaches zero
    h = build_h2(0.75, shift=-0.7)
    b = np.array([0.5, 0.5, 0.5, 0.5])
    r = quipi_solve(h, QuipiConfig(s=50.0, cut=None, iterations=3), b, require_positive=False)
    assert r.target_energy == pytest.approx(0.7056, abs=1e-12)
    assert r.final.energy_error < 1e-3


def test_shift_must_be_positive(singlet):
    with pytest.raises(ShiftError):
        quipi_solve(build_h2(0.75), QuipiConfig(), singlet)


def test_initial_state_checks(h2_shifted):
    with pytest.raises(ValueError, match="no initial state"):
        quipi_solve(h2_shifted, QuipiConfig())
    with pytest.raises(ValueError, match="shape"):
        quipi_solve(h2_shifted, QuipiConfig(), np.ones(2))
    r = quipi_solve(h2_shifted, QuipiConfig(initial_state="01-10", iterations=1))
    assert r.final.k == 1


def test_orthogonal_start_warns(h2_shifted):
    # |00> has no weight on the ground state of the two-qubit model
    assert subspace_fidelity(diagonalize(h2_shifted).eigenspace(0), np.eye(4)[0]) < 1e-12
    r = quipi_solve(h2_shifted, QuipiConfig(iterations=1), np.eye(4)[0])
    assert r.warnings and "overlap" in r.warnings[0]


def test_trotterized_run_on_fock(h2_shifted, singlet):
    cfg = QuipiConfig(s=10.0, cut=20, iterations=2, trotter_steps=16, backend="fock", fock_cut=30)
    r = quipi_solve(h2_shifted, cfg, singlet)
    assert r.final.energy_error < CHEMICAL_ACCURACY


def test_shot_noise_enters_reported_energy(h2_shifted, singlet):
    exact = quipi_solve(h2_shifted, QuipiConfig(iterations=2), singlet)
    noisy = quipi_solve(h2_shifted, QuipiConfig(iterations=2, shots=1000, seed=5), singlet)
    again = quipi_solve(h2_shifted, QuipiConfig(iterations=2, shots=1000, seed=5), singlet)
    assert noisy.final.energy != exact.final.energy
    assert noisy.to_csv() == again.to_csv()
    assert abs(noisy.final.energy - exact.final.energy) < 4 * noisy.final.energy_stderr


def test_csv_layout(h2_shifted, singlet):
    text = quipi_solve(h2_shifted, QuipiConfig(iterations=2), singlet).to_csv()
    lines = text.splitlines()
    assert lines[0] == ",".join(REPORT_COLUMNS)
    fields = lines[1].split(",")
    assert fields[0] == "1" and float(fields[1]) == float(repr(float(fields[1])))
    assert len(lines) == 3
