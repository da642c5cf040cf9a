import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from critotto.cycle import (
    ConfigError,
    CycleConfig,
    adiabatic_work,
    classify_regime,
    mode_energies,
    run_cycle,
    simulate_cycles,
)
from critotto.quantum import IntegratorOptions

FAST = IntegratorOptions(dt_max=1e-2)


def small(**kw):
    base = dict(L=10, h1=10.0, h2=1.0, T_H=1000.0, T_C=1.0, tau1=5.0, tau2=20.0, integrator=FAST)
    base.update(kw)
    return CycleConfig(**base)


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(L=3), dict(L=0), dict(L=True), dict(T_C=0.0),
                                    dict(T_C=2000.0), dict(tau1=0.0), dict(tau2=-1.0),
                                    dict(h1=math.inf), dict(power_denominator="bogus"),
                                    dict(power_denominator="explicit")])
    def test_rejects(self, kw):
        with pytest.raises(ConfigError):
            CycleConfig(**kw)

    def test_equal_temperatures_allowed(self):
        CycleConfig(T_H=5.0, T_C=5.0)

    def test_cycle_time(self):
        assert CycleConfig().cycle_time() == 100.0
        assert CycleConfig(power_denominator="tau1_plus_tau2").cycle_time() == 110.0
        assert CycleConfig(power_denominator="explicit", tau_total=7.0).cycle_time() == 7.0


class TestRegime:
    @pytest.mark.parametrize("q_in,q_out,w,expected", [
        (2.0, -1.0, -1.0, "engine"),
        (-1.0, 2.0, 1.0, "refrigerator"),
        (-1.0, -2.0, 3.0, "heater"),
        (1.0, 2.0, -3.0, "other"),
        (0.0, 0.0, 0.0, "other"),
    ])
    def test_sign_table(self, q_in, q_out, w, expected):
        assert classify_regime(q_in, q_out, w) == expected

    def test_tolerance_zeroes_roundoff(self):
        assert classify_regime(-1e-13, -1e-13, 2e-13, atol=1e-10) == "other"


def test_reference_point_is_an_engine(ref_cfg):
    r = run_cycle(ref_cfg)
    assert r.regime == "engine"
    assert r.W < 0 and r.Q_in > 0 and r.Q_out < 0
    assert r.eta == pytest.approx(-r.W / r.Q_in)
    assert r.P == pytest.approx(r.W / 100.0)
    # exact Boltzmann sums
    assert r.W_tilde == pytest.approx(adiabatic_work(ref_cfg)[2], rel=1e-14)


def test_no_work_without_field_change():
    r = run_cycle(small(h1=3.0, h2=3.0))
    assert abs(r.W) < 1e-10
    assert r.regime == "other"
    assert r.eta is None


def test_no_work_output_without_temperature_difference():
    cfg = small(T_H=2.0, T_C=2.0)
    assert adiabatic_work(cfg)[2] > 0
    assert run_cycle(cfg).regime != "engine"


def test_excess_decomposes_into_stroke_excesses():
    r = run_cycle(small())
    assert r.excess == pytest.approx(r.E_A_excess + r.E_C_excess, abs=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.5, 20), st.floats(0.5, 20), st.floats(0.05, 5), st.floats(1.0, 50.0),
       st.floats(0.5, 20))
def test_excess_never_negative(h1, h2, T_C, T_ratio, tau2):
    r = run_cycle(small(h1=h1, h2=h2, T_C=T_C, T_H=T_C * T_ratio, tau2=tau2))
    assert r.W - r.W_tilde >= -1e-9


def test_limit_cycle_reached_after_one_cycle():
    cfg = small()
    energies = simulate_cycles(cfg, 4)
    assert max(energies) - min(energies) == 0.0
    assert energies[0] == pytest.approx(run_cycle(cfg).E_A, abs=1e-12)


def test_single_mode_otto_efficiency():
    cfg = CycleConfig(L=2, h1=10.0, h2=1.0, T_H=1000.0, T_C=1.0, tau1=1e4, tau2=1e4)
    e = mode_energies(cfg)
    r = run_cycle(cfg)
    assert r.regime == "engine"
    assert r.eta == pytest.approx(1 - e["eps2"][0] / e["eps1"][0], abs=1e-6)


def test_single_mode_adiabatic_work_oracle():
    cfg = CycleConfig(L=2, h1=10.0, h2=1.0, T_H=1000.0, T_C=1.0)
    E_A_adia, _, W_tilde = adiabatic_work(cfg)
    # (eps1 - eps2)(tanh(eps1/2T_H) - tanh(eps2/2T_C)) at k = pi/2, mpmath
    assert W_tilde == pytest.approx(-15.1700261597005, rel=1e-12)
    assert E_A_adia == pytest.approx(-17.8563287950710, rel=1e-12)


@pytest.mark.parametrize("T_C", [0.5, 3.0, 40.0])
def test_carnot_bound(T_C):
    r = run_cycle(small(T_C=T_C, T_H=T_C * 20))
    if r.regime == "engine":
        assert r.eta <= 1 - 1 / 20 + 1e-12


def test_work_output_grows_with_slower_ramp():
    out = [abs(run_cycle(small(tau2=t)).W) for t in (2.0, 8.0, 32.0, 128.0)]
    assert out == sorted(out)


def test_power_denominators():
    r1 = run_cycle(small(power_denominator="tau1_plus_tau2"))
    r2 = run_cycle(small(power_denominator="explicit", tau_total=50.0))
    assert r1.P == pytest.approx(r1.W / 25.0)
    assert r2.P == pytest.approx(r2.W / 50.0)


def test_deterministic():
    assert run_cycle(small()) == run_cycle(small())


@pytest.mark.slow
def test_work_output_monotone_in_tau2_on_reference_set(ref_cfg):
    out = [abs(run_cycle(ref_cfg.with_(tau2=t)).W) for t in np.geomspace(1, 1000, 16)]
    assert all(b >= a - 1e-6 for a, b in zip(out, out[1:]))


@pytest.mark.parametrize("tau1", [10.0, 100.0, 1000.0])
def test_hot_bath_state_insensitive_to_first_ramp(ref_cfg, tau1):
    r = run_cycle(ref_cfg.with_(tau1=tau1))
    assert abs(r.E_C - r.E_C_adia) / abs(r.E_C_adia) < 1e-3


def test_first_ramp_residual_positive_and_decaying(ref_cfg):
    res = [run_cycle(ref_cfg.with_(tau1=t)).E_C_excess for t in (10.0, 100.0, 1000.0)]
    assert all(x > 0 for x in res)
    assert res[0] > res[1] > res[2]
