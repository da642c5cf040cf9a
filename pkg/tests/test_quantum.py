import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from critotto.model import ModeHamiltonian, RampProtocol, momentum_grid, tfim_mode_hamiltonian
from critotto.quantum import (
    IntegratorOptions,
    ModeState,
    adiabatic_map,
    apply_propagators,
    eigen_populations,
    evolve_mode,
    evolve_mode_dense,
    mode_energy_expectation,
    mode_excess_excitation,
    partition_function,
    ramp_propagators,
    thermal_blocks,
    thermal_mode_state,
)

# Excitation probabilities of the lowest five L=100 modes after a ground-state
# sweep h = 1 -> 10, from scipy DOP853 at rtol 1e-12 (independent of the kernel).
DOP853_EXCITATION = {
    10: [0.46285839230556197, 0.39008429558914476, 0.3216288226495692, 0.25972827558030104,
         0.20581511233803076],
    100: [0.4005175115702493, 0.22706780585215725, 0.11087456854942959, 0.048959359913756544,
          0.02108770833522034],
}
# same oracle, k = pi/2, tau = 10
DOP853_HALF_PI_TAU10 = 0.0014375481768349153


def ground_state(hk):
    return thermal_mode_state(hk, 1e-300)


def excited_population(s, hk):
    return eigen_populations_unchecked(s, hk)[1]


def eigen_populations_unchecked(s, hk):
    w, v = np.linalg.eigh(hk.block())
    return [float((v[:, i].conj() @ s.block @ v[:, i]).real) for i in range(2)]


class TestThermal:
    def test_zero_gap_is_maximally_mixed(self):
        s = thermal_mode_state(ModeHamiltonian(0.0, 0.0), 0.3)
        np.testing.assert_allclose(s.block, np.eye(2) / 4, atol=1e-15)
        assert s.p2 == s.p3 == 0.25

    def test_infinite_temperature_is_maximally_mixed(self):
        s = thermal_mode_state(tfim_mode_hamiltonian(0.3, 10.0), 1e12)
        np.testing.assert_allclose(s.dense(), np.eye(4) / 4, atol=1e-10)

    def test_ground_population_scalar_oracle(self):
        # e^2 / (2 + e^2 + e^-2), evaluated with mpmath
        hk = tfim_mode_hamiltonian(math.pi / 2, 0.0)  # gap 2
        g, e = eigen_populations(thermal_mode_state(hk, 1.0), hk)
        assert g == pytest.approx(0.775803492574375926711104956542, rel=1e-14)
        assert e == pytest.approx(math.exp(-2) / (2 + math.exp(2) + math.exp(-2)), rel=1e-14)

    def test_energy_matches_closed_form(self):
        hk = tfim_mode_hamiltonian(math.pi / 2, 0.0)
        # 2 (e^-2 - e^2) / (2 + e^2 + e^-2), mpmath
        assert mode_energy_expectation(thermal_mode_state(hk, 1.0), hk) == pytest.approx(
            -1.52318831191152977623891656521, rel=1e-14)

    @given(st.floats(0.01, 3.1), st.floats(-15, 15), st.floats(1e-3, 1e4))
    def test_commutes_with_hamiltonian(self, k, h, T):
        hk = tfim_mode_hamiltonian(k, h)
        s = thermal_mode_state(hk, T).validate()
        H = hk.block()
        assert np.max(np.abs(H @ s.block - s.block @ H)) < 1e-12
        assert s.p2 == s.p3

    def test_saturates_without_overflow(self):
        hk = tfim_mode_hamiltonian(0.5, 10.0)
        s = thermal_mode_state(hk, 1e-6)
        assert np.all(np.isfinite(s.block))
        assert s.p2 == 0.0
        assert mode_energy_expectation(s, hk) == pytest.approx(-hk.gap(), rel=1e-14)

    def test_rejects_nonpositive_temperature(self):
        with pytest.raises(ValueError):
            thermal_mode_state(tfim_mode_hamiltonian(0.5, 1.0), 0.0)


def test_partition_function():
    assert partition_function(0.0, 3.0) == 4.0
    assert partition_function(1.0, 1.0) == pytest.approx(5.08616126963048755695581124151)
    assert partition_function(2.0, 1000.0) == pytest.approx(4.00000400000133333351111112381,
                                                            rel=1e-15)
    assert partition_function(1e6, 1.0) == math.inf
    with pytest.raises(ValueError):
        partition_function(1.0, -1.0)


def test_energy_of_mixed_and_ground_states():
    hk = tfim_mode_hamiltonian(1.1, 3.0)
    mixed = ModeState(np.eye(2) / 4, 0.25, 0.25)
    assert mode_energy_expectation(mixed, hk) == 0.0
    assert mode_energy_expectation(ground_state(hk), hk) == pytest.approx(-hk.gap())


class TestEvolve:
    def test_constant_hamiltonian_leaves_eigenstate(self):
        hk = tfim_mode_hamiltonian(0.4, 2.0)
        s = thermal_mode_state(hk, 0.7)
        out = evolve_mode(s, 0.4, RampProtocol(2.0, 2.0, 50.0))
        np.testing.assert_allclose(out.block, s.block, atol=1e-12)
        assert mode_energy_expectation(out, hk) == pytest.approx(mode_energy_expectation(s, hk))

    def test_slow_sweep_is_adiabatic(self):
        k = math.pi / 4
        s = ground_state(tfim_mode_hamiltonian(k, 10.0))
        out = evolve_mode(s, k, RampProtocol(10.0, 1.0, 1e4))
        # residual scales as 1/tau^2
        assert excited_population(out, tfim_mode_hamiltonian(k, 1.0)) < 1e-7

    @pytest.mark.parametrize("tau", [10, 100])
    def test_matches_independent_ode_solver(self, tau):
        for j, k in enumerate(momentum_grid(100)[:5]):
            s = ground_state(tfim_mode_hamiltonian(k, 1.0))
            out = evolve_mode(s, k, RampProtocol(1.0, 10.0, tau))
            p = excited_population(out, tfim_mode_hamiltonian(k, 10.0))
            assert p == pytest.approx(DOP853_EXCITATION[tau][j], rel=2e-6)

    def test_noncritical_mode_against_ode_solver(self):
        k = math.pi / 2
        s = ground_state(tfim_mode_hamiltonian(k, 1.0))
        out = evolve_mode(s, k, RampProtocol(1.0, 10.0, 10.0))
        p = excited_population(out, tfim_mode_hamiltonian(k, 10.0))
        assert p == pytest.approx(DOP853_HALF_PI_TAU10, rel=1e-4)

    def test_dense_reference_path_agrees(self):
        k = 0.3
        s = thermal_mode_state(tfim_mode_hamiltonian(k, 4.0), 0.8)
        ramp = RampProtocol(4.0, 0.5, 2.0)
        opts = IntegratorOptions(dt_max=0.01)
        dense = evolve_mode_dense(s, k, ramp, opts)
        fast = evolve_mode(s, k, ramp, opts).dense()
        np.testing.assert_allclose(fast, dense, atol=1e-12)

    def test_inert_levels_bit_identical(self):
        s = thermal_mode_state(tfim_mode_hamiltonian(0.2, 1.0), 2.0)
        out = evolve_mode(s, 0.2, RampProtocol(1.0, 10.0, 30.0))
        assert out.p2 == s.p2 and out.p3 == s.p3

    @given(st.floats(0.01, 3.13), st.floats(-10, 10), st.floats(-10, 10), st.floats(0.01, 50),
           st.floats(0.05, 50))
    def test_unitary_invariants(self, k, ha, hb, tau, T):
        s = thermal_mode_state(tfim_mode_hamiltonian(k, ha), T)
        out = evolve_mode(s, k, RampProtocol(ha, hb, tau), IntegratorOptions(dt_max=1e-2))
        assert out.trace == pytest.approx(s.trace, abs=1e-10)
        assert out.purity() == pytest.approx(s.purity(), abs=1e-10)
        np.testing.assert_allclose(np.linalg.eigvalsh(out.block), np.linalg.eigvalsh(s.block),
                                   atol=1e-10)
        out.validate(1e-10)

    def test_rejects_invalid_state(self):
        bad = ModeState(np.eye(2), 0.5, 0.5)
        with pytest.raises(ValueError):
            evolve_mode(bad, 0.3, RampProtocol(1.0, 2.0, 1.0))


def _reference_strokes(opts):
    ks = momentum_grid(100)
    d = lambda h: -2 * (h - np.cos(ks))  # noqa: E731
    o = 2 * np.sin(ks)
    out = []
    for (h_from, h_to, tau, T) in [(10.0, 1.0, 10.0, 1000.0), (1.0, 10.0, 100.0, 1.0)]:
        rho, _ = thermal_blocks(d(h_from), o, T)
        out.append(apply_propagators(rho, *ramp_propagators(ks, RampProtocol(h_from, h_to, tau),
                                                            opts)))
    return out


def test_scheme_agreement_on_reference_parameters():
    exact = _reference_strokes(IntegratorOptions())
    rk4 = _reference_strokes(IntegratorOptions(scheme="rk4_crosscheck"))
    for a, b in zip(exact, rk4):
        assert np.max(np.abs(a - b)) < 1e-6


def test_step_halving_convergence():
    base = _reference_strokes(IntegratorOptions(dt_max=1e-3))
    half = _reference_strokes(IntegratorOptions(dt_max=5e-4))
    for a, b in zip(base, half):
        assert np.max(np.abs(a - b)) < 1e-8


class TestAdiabaticMap:
    def test_identity(self):
        hk = tfim_mode_hamiltonian(0.5, 3.0)
        s = thermal_mode_state(hk, 1.5)
        np.testing.assert_allclose(adiabatic_map(s, hk, hk).block, s.block, atol=1e-15)

    def test_ground_to_ground(self):
        a, b = tfim_mode_hamiltonian(0.5, 3.0), tfim_mode_hamiltonian(0.5, 1.0)
        out = adiabatic_map(ground_state(a), a, b)
        np.testing.assert_allclose(out.block, ground_state(b).block, atol=1e-14)

    def test_thermal_population_bookkeeping(self):
        k = 0.9
        h1, h2, T = 10.0, 1.0, 0.8
        a, b = tfim_mode_hamiltonian(k, h2), tfim_mode_hamiltonian(k, h1)
        e2, e1 = a.gap(), b.gap()
        Z = 2 + math.exp(e2 / T) + math.exp(-e2 / T)
        expected = e1 * (math.exp(-e2 / T) - math.exp(e2 / T)) / Z
        out = adiabatic_map(thermal_mode_state(a, T), a, b)
        assert mode_energy_expectation(out, b) == pytest.approx(expected, rel=1e-13)

    def test_rejects_coherent_state(self):
        hk = tfim_mode_hamiltonian(0.5, 3.0)
        s = ModeState(np.array([[0.5, 0.2], [0.2, 0.5]]), 0.0, 0.0)
        with pytest.raises(ValueError):
            adiabatic_map(s, hk, hk)


class TestExcessExcitation:
    def test_zero_for_adiabatic_state(self):
        hk = tfim_mode_hamiltonian(0.3, 2.0)
        s = thermal_mode_state(hk, 1.0)
        assert mode_excess_excitation(s, hk, s) == 0.0

    def test_ground_start_equals_excited_population(self):
        k = momentum_grid(100)[2]
        a, b = tfim_mode_hamiltonian(k, 1.0), tfim_mode_hamiltonian(k, 10.0)
        s0 = ground_state(a)
        out = evolve_mode(s0, k, RampProtocol(1.0, 10.0, 30.0))
        assert mode_excess_excitation(out, b, adiabatic_map(s0, a, b)) == pytest.approx(
            excited_population(out, b), rel=1e-10)

    @pytest.mark.parametrize("T", [0.3, 1.0, 7.0])
    def test_thermal_start_carries_tanh_factor(self, T):
        k = momentum_grid(100)[1]
        a, b = tfim_mode_hamiltonian(k, 1.0), tfim_mode_hamiltonian(k, 10.0)
        ramp = RampProtocol(1.0, 10.0, 20.0)
        results = []
        for s0 in (ground_state(a), thermal_mode_state(a, T)):
            out = evolve_mode(s0, k, ramp)
            results.append(mode_excess_excitation(out, b, adiabatic_map(s0, a, b)))
        assert results[1] / results[0] == pytest.approx(math.tanh(a.gap() / (2 * T)), rel=1e-9)

    def test_closed_gap_rejected(self):
        hk = ModeHamiltonian(0.0, 0.0)
        s = ModeState(np.eye(2) / 4, 0.25, 0.25)
        with pytest.raises(ValueError):
            mode_excess_excitation(s, hk, s)


def test_integrator_options():
    assert IntegratorOptions().n_steps(0.01) == 100
    assert IntegratorOptions().n_steps(100.0) == 100000
    with pytest.raises(ValueError):
        IntegratorOptions(dt_max=0)
    with pytest.raises(ValueError):
        IntegratorOptions(scheme="euler")
