"""Four-stroke quantum Otto cycle on a free-fermion working medium.

Strokes: A->B hot bath at h1 (full thermalisation), B->C ramp h1->h2 over
tau1, C->D cold bath at h2, D->A ramp h2->h1 over tau2.  Heats follow the sign
convention Q_in = E_B - E_A, Q_out = E_D - E_C, W = -(Q_in + Q_out), so a
working engine has W < 0.
"""
from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import asdict, dataclass, field, replace
from typing import Literal, Optional

import numpy as np

from .model import TFIM, RampProtocol, WorkingMedium
from .quantum import (
    IntegratorOptions,
    apply_propagators,
    block_energies,
    ramp_propagators,
    thermal_blocks,
)

PowerDenominator = Literal["tau2_only", "tau1_plus_tau2", "explicit"]
Regime = Literal["engine", "refrigerator", "heater", "other"]


class ConfigError(ValueError):
    """Physically contradictory cycle parameters."""


@dataclass(frozen=True)
class CycleConfig:
    L: int = 100
    h1: float = 10.0
    h2: float = 1.0
    T_H: float = 1000.0
    T_C: float = 1.0
    tau1: float = 10.0
    tau2: float = 100.0
    integrator: IntegratorOptions = field(default_factory=IntegratorOptions)
    power_denominator: PowerDenominator = "tau2_only"
    tau_total: Optional[float] = None

    def __post_init__(self):
        if isinstance(self.L, bool) or int(self.L) != self.L or self.L < 2 or self.L % 2:
            raise ConfigError(f"L must be an even integer >= 2, got {self.L!r}")
        object.__setattr__(self, "L", int(self.L))
        for name in ("h1", "h2", "T_H", "T_C", "tau1", "tau2"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        if not self.T_C > 0:
            raise ConfigError(f"T_C must be positive, got {self.T_C}")
        # T_H == T_C is allowed as a degenerate (no-engine) reference point
        if self.T_C > self.T_H:
            raise ConfigError(f"need T_H >= T_C, got T_H={self.T_H}, T_C={self.T_C}")
        if not (self.tau1 > 0 and self.tau2 > 0):
            raise ConfigError("ramp durations must be positive")
        if self.power_denominator == "explicit":
            if self.tau_total is None or not self.tau_total > 0:
                raise ConfigError("explicit power denominator needs tau_total > 0")
        elif self.power_denominator not in ("tau2_only", "tau1_plus_tau2"):
            raise ConfigError(f"unknown power denominator {self.power_denominator!r}")

    def with_(self, **changes) -> CycleConfig:
        return replace(self, **changes)

    def cycle_time(self) -> float:
        if self.power_denominator == "tau2_only":
            return self.tau2
        if self.power_denominator == "tau1_plus_tau2":
            return self.tau1 + self.tau2
        return self.tau_total

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class CycleResult:
    E_A: float
    E_B: float
    E_C: float
    E_D: float
    E_A_adia: float
    E_C_adia: float
    Q_in: float
    Q_out: float
    W: float
    W_tilde: float
    E_A_excess: float
    E_C_excess: float
    eta: Optional[float]
    P: float
    regime: Regime

    @property
    def excess(self) -> float:
        """W - W_tilde = E_A_excess + E_C_excess."""
        return self.W - self.W_tilde


def _sign(x: float, atol: float) -> int:
    return 1 if x > atol else -1 if x < -atol else 0


def classify_regime(Q_in: float, Q_out: float, W: float, atol: float = 0.0) -> Regime:
    """Sign pattern of the heats and work; magnitudes up to ``atol`` count as zero."""
    signs = (_sign(Q_in, atol), _sign(Q_out, atol), _sign(W, atol))
    return {(1, -1, -1): "engine", (-1, 1, 1): "refrigerator",
            (-1, -1, 1): "heater"}.get(signs, "other")


def _sum(values) -> float:
    # exactly rounded, hence independent of evaluation order
    return math.fsum(np.asarray(values, dtype=float).tolist())


@lru_cache(maxsize=512)
def _stroke_propagators(medium: WorkingMedium, L: int, ramp: RampProtocol,
                        opts: IntegratorOptions):
    # the propagator ignores the bath temperatures, so T_C sweeps reuse it
    a, b = ramp_propagators(medium.momentum_grid(L), ramp, opts, medium)
    a.setflags(write=False)
    b.setflags(write=False)
    return a, b


def mode_energies(cfg: CycleConfig, medium: WorkingMedium = TFIM) -> dict[str, np.ndarray]:
    """Per-mode stroke energies and their adiabatic references."""
    ks = medium.momentum_grid(cfg.L)
    m, o = medium.mode_terms(ks)
    c = medium.field_coupling
    d1, d2 = c * cfg.h1 + m, c * cfg.h2 + m
    eps1, eps2 = np.hypot(d1, o), np.hypot(d2, o)

    down = _stroke_propagators(medium, cfg.L, RampProtocol(cfg.h1, cfg.h2, cfg.tau1), cfg.integrator)
    up = _stroke_propagators(medium, cfg.L, RampProtocol(cfg.h2, cfg.h1, cfg.tau2), cfg.integrator)
    rho_B, _ = thermal_blocks(d1, o, cfg.T_H)
    rho_C = apply_propagators(rho_B, *down)
    rho_D, _ = thermal_blocks(d2, o, cfg.T_C)
    rho_A = apply_propagators(rho_D, *up)
    return {
        "k": ks,
        "eps1": eps1,
        "eps2": eps2,
        "E_A": block_energies(rho_A, d1, o),
        "E_B": block_energies(rho_B, d1, o),
        "E_C": block_energies(rho_C, d2, o),
        "E_D": block_energies(rho_D, d2, o),
        "E_A_adia": -eps1 * np.tanh(eps2 / (2 * cfg.T_C)),
        "E_C_adia": -eps2 * np.tanh(eps1 / (2 * cfg.T_H)),
    }


def adiabatic_work(cfg: CycleConfig, medium: WorkingMedium = TFIM) -> tuple[float, float, float]:
    """(E_A_adia, E_C_adia, W_tilde) from Boltzmann weights alone, no dynamics."""
    ks = medium.momentum_grid(cfg.L)
    m, o = medium.mode_terms(ks)
    c = medium.field_coupling
    eps1, eps2 = np.hypot(c * cfg.h1 + m, o), np.hypot(c * cfg.h2 + m, o)
    t_hot = np.tanh(eps1 / (2 * cfg.T_H))
    t_cold = np.tanh(eps2 / (2 * cfg.T_C))
    E_B, E_D = -_sum(eps1 * t_hot), -_sum(eps2 * t_cold)
    E_A_adia, E_C_adia = -_sum(eps1 * t_cold), -_sum(eps2 * t_hot)
    W_tilde = -(E_B - E_A_adia + E_D - E_C_adia)
    return E_A_adia, E_C_adia, W_tilde


def efficiency_and_power(r: CycleResult, cfg: CycleConfig) -> tuple[Optional[float], float]:
    eta = -r.W / r.Q_in if r.regime == "engine" else None
    return eta, r.W / cfg.cycle_time()


def run_cycle(cfg: CycleConfig, medium: WorkingMedium = TFIM) -> CycleResult:
    e = mode_energies(cfg, medium)
    E = {key: _sum(e[key]) for key in ("E_A", "E_B", "E_C", "E_D", "E_A_adia", "E_C_adia")}
    Q_in = E["E_B"] - E["E_A"]
    Q_out = E["E_D"] - E["E_C"]
    W = -(Q_in + Q_out)
    W_tilde = -(E["E_B"] - E["E_A_adia"] + E["E_D"] - E["E_C_adia"])
    # roundoff floor of the propagated energies
    atol = 1e-10 * max(1.0, *(abs(v) for v in E.values()))
    regime = classify_regime(Q_in, Q_out, W, atol)
    r = CycleResult(
        **E, Q_in=Q_in, Q_out=Q_out, W=W, W_tilde=W_tilde,
        E_A_excess=_sum(e["E_A"] - e["E_A_adia"]),
        E_C_excess=_sum(e["E_C"] - e["E_C_adia"]),
        eta=None, P=math.nan, regime=regime,
    )
    eta, P = efficiency_and_power(r, cfg)
    return replace(r, eta=eta, P=P)


def simulate_cycles(cfg: CycleConfig, n_cycles: int, medium: WorkingMedium = TFIM) -> list[float]:
    """E_A after each of ``n_cycles`` chained cycles."""
    ks = medium.momentum_grid(cfg.L)
    m, o = medium.mode_terms(ks)
    c = medium.field_coupling
    d1, d2 = c * cfg.h1 + m, c * cfg.h2 + m
    down = _stroke_propagators(medium, cfg.L, RampProtocol(cfg.h1, cfg.h2, cfg.tau1), cfg.integrator)
    up = _stroke_propagators(medium, cfg.L, RampProtocol(cfg.h2, cfg.h1, cfg.tau2), cfg.integrator)
    energies = []
    for _ in range(n_cycles):
        # the baths overwrite whatever state arrives, so only the last ramp matters
        rho, _ = thermal_blocks(d1, o, cfg.T_H)
        rho = apply_propagators(rho, *down)
        rho, _ = thermal_blocks(d2, o, cfg.T_C)
        rho = apply_propagators(rho, *up)
        energies.append(_sum(block_energies(rho, d1, o)))
    return energies
