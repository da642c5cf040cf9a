"""Free-fermion working media, momentum grids and linear field ramps.

A working medium is a translation-invariant chain whose Hamiltonian splits
into independent momentum modes.  Each mode lives in a four-dimensional space
(|00>, |10>, |01>, |11>) in which only the {|00>, |11>} pair is coupled::

    H_k = [[ d, 0, 0, o],
           [ 0, 0, 0, 0],
           [ 0, 0, 0, 0],
           [ o, 0, 0,-d]]

with ``d = c * alpha + m_k`` (linear in the driving parameter) and ``o = n_k``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol

import numpy as np


@dataclass(frozen=True)
class ModeHamiltonian:
    diag: float
    offdiag: float

    def gap(self) -> float:
        """Single-particle energy: eigenvalues are -gap, 0, 0, +gap."""
        return math.hypot(self.diag, self.offdiag)

    def block(self) -> np.ndarray:
        return np.array([[self.diag, self.offdiag], [self.offdiag, -self.diag]], dtype=complex)

    def dense(self) -> np.ndarray:
        """Full 4x4 matrix, for cross-checks only."""
        h = np.zeros((4, 4), dtype=complex)
        h[0, 0], h[3, 3] = self.diag, -self.diag
        h[0, 3] = h[3, 0] = self.offdiag
        return h


@dataclass(frozen=True)
class CriticalExponents:
    nu: float
    z: float
    d: int

    def __post_init__(self):
        if not (self.nu > 0 and self.z > 0 and self.d > 0):
            raise ValueError(f"critical exponents must be positive, got {self}")


@dataclass(frozen=True)
class RampProtocol:
    """Linear ramp alpha_start -> alpha_end over [t_offset, t_offset + duration]."""

    alpha_start: float
    alpha_end: float
    duration: float
    t_offset: float = 0.0

    def __post_init__(self):
        if not (self.duration > 0 and math.isfinite(self.duration)):
            raise ValueError(f"ramp duration must be positive and finite, got {self.duration}")
        if not (math.isfinite(self.alpha_start) and math.isfinite(self.alpha_end)):
            raise ValueError("ramp endpoints must be finite")

    def reversed(self) -> RampProtocol:
        return RampProtocol(self.alpha_end, self.alpha_start, self.duration, self.t_offset)


def ramp_value(p: RampProtocol, t: float) -> float:
    s = (t - p.t_offset) / p.duration
    # allow a few ulps of slack at the window edges
    if not -1e-12 <= s <= 1 + 1e-12:
        raise ValueError(f"t={t} outside ramp window [{p.t_offset}, {p.t_offset + p.duration}]")
    s = min(max(s, 0.0), 1.0)
    if s == 1.0:
        return p.alpha_end
    return p.alpha_start + (p.alpha_end - p.alpha_start) * s


def momentum_grid(L: int) -> np.ndarray:
    """Antiperiodic positive momenta k_j = (2j+1) pi / L, j = 0 .. L/2 - 1."""
    if isinstance(L, bool) or int(L) != L or L < 2 or L % 2:
        raise ValueError(f"L must be an even integer >= 2, got {L!r}")
    L = int(L)
    return (2 * np.arange(L // 2) + 1) * np.pi / L


def kz_exponent_zero_T(c: CriticalExponents) -> float:
    """Exponent of tau in the zero-temperature defect density."""
    return -c.nu * c.d / (c.nu * c.z + 1)


def kz_exponent_thermal(c: CriticalExponents) -> float:
    """Exponent of tau in the high-temperature excess defect density (times 1/T)."""
    return -(c.d + c.z) * c.nu / (c.nu * c.z + 1)


class WorkingMedium(Protocol):
    field_coupling: float

    def momentum_grid(self, L: int) -> np.ndarray: ...

    def mode_terms(self, k) -> tuple[np.ndarray, np.ndarray]:
        """Return (m_k, n_k) so that diag = field_coupling * alpha + m_k, offdiag = n_k."""
        ...

    def critical_exponents(self) -> CriticalExponents: ...

    def critical_alpha(self) -> float: ...


def mode_hamiltonian(medium: WorkingMedium, k: float, alpha: float) -> ModeHamiltonian:
    m, n = medium.mode_terms(k)
    return ModeHamiltonian(float(medium.field_coupling * alpha + m), float(n))


def mode_gaps(medium: WorkingMedium, ks: np.ndarray, alpha: float) -> np.ndarray:
    m, n = medium.mode_terms(ks)
    return np.hypot(medium.field_coupling * alpha + m, n)


class TransverseIsing:
    """H = -J sum s^z s^z - h sum s^x with J = 1; the field h is the driving parameter."""

    field_coupling = -2.0

    def momentum_grid(self, L: int) -> np.ndarray:
        return momentum_grid(L)

    def mode_terms(self, k):
        return 2.0 * np.cos(k), 2.0 * np.sin(k)

    def critical_exponents(self) -> CriticalExponents:
        return CriticalExponents(nu=1.0, z=1.0, d=1)

    def critical_alpha(self) -> float:
        return 1.0

    def __repr__(self):
        return "TransverseIsing()"


TFIM = TransverseIsing()


def tfim_mode_hamiltonian(k: float, h: float) -> ModeHamiltonian:
    if not 0 < k < math.pi:
        raise ValueError(f"momentum must lie in (0, pi), got {k}")
    return ModeHamiltonian(-2.0 * (h - math.cos(k)), 2.0 * math.sin(k))


def tfim_gap(k, h):
    """eps_k(h) = 2 sqrt((h - cos k)^2 + sin^2 k), vectorised."""
    return 2.0 * np.hypot(h - np.cos(k), np.sin(k))
