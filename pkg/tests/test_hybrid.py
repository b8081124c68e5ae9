import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quipi.hamiltonians import build_h2, diagonalize, expectation
from quipi.hybrid import (
    HybridIPIConfig,
    evolution_time_budget,
    geometric_factor,
    hybrid_energy,
    hybrid_inverse_apply,
    hybrid_inverse_bruteforce,
    ideal_inverse_energy,
    reference_energy,
    riemann_factor,
)
from quipi.solver import ShiftError, parse_state


@pytest.mark.parametrize("kwargs", [{"delta_p": 0.0, "m_j": 3}, {"delta_p": 0.1, "m_j": 0}, {"delta_p": 0.1, "m_j": 2, "k": -1}, {"delta_p": 0.1, "m_j": 2, "damping": 0.0}])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        HybridIPIConfig(**kwargs)


@given(st.floats(-20, 20), st.floats(0.01, 1.0), st.integers(1, 200))
def test_geometric_closed_form_equals_direct_sum(energy, dp, m):
    cfg = HybridIPIConfig(dp, m)
    direct = riemann_factor(energy, cfg)[0]
    assert abs(geometric_factor(energy, cfg) - direct) < 1e-9 * max(1.0, m * dp)


def test_closed_form_keeps_small_phases():
    cfg = HybridIPIConfig(0.5, 2)
    # dp (1 + exp(-i E dp)) for E = 1e-8
    assert geometric_factor(1e-8, cfg) == pytest.approx(complex(1.0, -2.5e-9), abs=1e-17)


def test_full_period_sums_to_m_dp():
    dp, m = 0.25, 7
    energy = 2 * np.pi / dp
    assert geometric_factor(energy, HybridIPIConfig(dp, m)) == pytest.approx(m * dp)
    assert riemann_factor(energy, HybridIPIConfig(dp, m))[0] == pytest.approx(m * dp)


def test_closed_form_rejects_damping():
    with pytest.raises(ValueError):
        geometric_factor(1.0, HybridIPIConfig(0.1, 5, damping=2.0))


@settings(max_examples=20)
@given(st.integers(0, 3), st.integers(1, 20), st.floats(0.02, 0.5), st.booleans(), st.integers(0, 10**6))
def test_factorized_sum_equals_brute_force(k, m, dp, damped, seed):
    h = build_h2(0.75, shift=1.37)
    rng = np.random.default_rng(seed)
    b = rng.normal(size=4) + 1j * rng.normal(size=4)
    cfg = HybridIPIConfig(dp, m, k, damping=m * dp / 2 if damped else None)
    want = hybrid_inverse_bruteforce(h, b, cfg)
    got = hybrid_inverse_apply(h, b, cfg)
    assert np.max(np.abs(got - want)) < 1e-10 * max(1.0, np.max(np.abs(want)))


def test_brute_force_limit():
    with pytest.raises(ValueError, match="limit"):
        hybrid_inverse_bruteforce(build_h2(0.75, shift=1.37), np.ones(4), HybridIPIConfig(0.1, 1001, 2))


def test_riemann_error_is_first_order_in_step(h2_shifted):
    energies = diagonalize(h2_shifted).eigenvalues
    phi = 10.0
    exact = (1 - np.exp(-1j * energies * phi)) / (1j * energies)
    err = []
    for dp in (0.1, 0.05, 0.025):
        err.append(np.max(np.abs(riemann_factor(energies, HybridIPIConfig(dp, round(phi / dp))) - exact)))
    assert 1.5 <= err[0] / err[1] <= 2.5
    assert 1.5 <= err[1] / err[2] <= 2.5


def test_energy_ignores_global_phase(h2_shifted, singlet):
    cfg = HybridIPIConfig(0.1, 50, 2)
    assert hybrid_energy(h2_shifted, 1j * singlet, cfg) == pytest.approx(hybrid_energy(h2_shifted, singlet, cfg), abs=1e-13)


def test_eigenstate_returns_its_energy(h2_shifted):
    spec = diagonalize(h2_shifted)
    cfg = HybridIPIConfig(0.1, 40, 3)
    for n in range(4):
        e = hybrid_energy(h2_shifted, spec.eigenvectors[:, n], cfg)
        assert e == pytest.approx(spec.eigenvalues[n] - h2_shifted.shift, abs=1e-12)


def test_zero_power_returns_start_energy(h2, h2_shifted, singlet):
    cfg = HybridIPIConfig(0.1, 10, 0)
    assert hybrid_energy(h2_shifted, singlet, cfg) == pytest.approx(expectation(h2, singlet), abs=1e-12)


def test_damped_sums_converge_to_ideal_inverse(h2_shifted, singlet):
    dp = 0.05
    for k in (1, 3):
        err = []
        for phi in (40.0, 80.0, 160.0, 320.0):
            cfg = HybridIPIConfig(dp, round(phi / dp), k, damping=phi / 4)
            err.append(abs(hybrid_energy(h2_shifted, singlet, cfg) - ideal_inverse_energy(h2_shifted, singlet, k)))
        assert all(a > b for a, b in zip(err, err[1:]))
        assert err[-1] < 1e-3
    cfg = HybridIPIConfig(dp, 6400, 8, damping=80.0)
    assert hybrid_energy(h2_shifted, singlet, cfg) == pytest.approx(reference_energy(h2_shifted), abs=1e-4)


def test_unshifted_hamiltonian_is_rejected(h2, singlet):
    with pytest.raises(ShiftError):
        hybrid_inverse_apply(h2, singlet, HybridIPIConfig(0.1, 5))


def test_ideal_inverse_energy_at_zero_power(h2_shifted):
    b = parse_state("plus", 2)
    assert ideal_inverse_energy(h2_shifted, b, 0) == pytest.approx(expectation(h2_shifted, b) - 1.37, abs=1e-12)


def test_time_budget():
    assert evolution_time_budget(HybridIPIConfig(0.1, 1, 3)).max_evolution_time == 0.0
    tb = evolution_time_budget(HybridIPIConfig(0.1, 100, 2))
    assert tb.max_evolution_time == pytest.approx(19.8)
    assert tb.evolutions == 10_000
    # each slot sums 0.1 * (0 + ... + 99) over 100 choices of the other slot
    assert tb.total_evolution_time == pytest.approx(2 * 100 * 0.1 * 4950)
    assert evolution_time_budget(HybridIPIConfig(0.1, 5, 0)).total_evolution_time == 0.0
