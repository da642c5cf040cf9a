"""Per-mode density matrices: thermal states, ramp propagation, adiabatic reference.

A mode state is stored as the 2x2 block on {|00>, |11>} plus the two inert
populations of |10> and |01>.  Block propagators are SU(2) matrices
``[[a, b], [-conj(b), conj(a)]]`` and are carried as the pair ``(a, b)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numba
import numpy as np

from .model import TFIM, ModeHamiltonian, RampProtocol, WorkingMedium

Scheme = Literal["exact_midpoint_exponential", "rk4_crosscheck"]
SCHEMES = ("exact_midpoint_exponential", "rk4_crosscheck")

STATE_TOL = 1e-12


@dataclass(frozen=True)
class IntegratorOptions:
    dt_max: float = 1e-3
    substeps_min: int = 100
    scheme: Scheme = "exact_midpoint_exponential"

    def __post_init__(self):
        if not self.dt_max > 0:
            raise ValueError(f"dt_max must be positive, got {self.dt_max}")
        if self.substeps_min < 1:
            raise ValueError(f"substeps_min must be >= 1, got {self.substeps_min}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")

    def n_steps(self, duration: float) -> int:
        return max(self.substeps_min, math.ceil(duration / self.dt_max))


@dataclass(frozen=True)
class ModeState:
    block: np.ndarray = field(repr=False)
    p2: float
    p3: float

    def __post_init__(self):
        block = np.array(self.block, dtype=complex)
        block.setflags(write=False)
        object.__setattr__(self, "block", block)

    @property
    def trace(self) -> float:
        return float(np.trace(self.block).real) + self.p2 + self.p3

    def purity(self) -> float:
        return float(np.sum(np.abs(self.block) ** 2)) + self.p2**2 + self.p3**2

    def validate(self, tol: float = STATE_TOL) -> ModeState:
        b = self.block
        if b.shape != (2, 2) or not np.all(np.isfinite(b)):
            raise ValueError("mode block must be a finite 2x2 matrix")
        if np.max(np.abs(b - b.conj().T)) > tol:
            raise ValueError("mode block is not Hermitian")
        if abs(self.trace - 1.0) > tol:
            raise ValueError(f"mode state trace {self.trace} != 1")
        if np.linalg.eigvalsh(b).min() < -tol:
            raise ValueError("mode block is not positive semidefinite")
        if not (-tol <= self.p2 <= 1 + tol and -tol <= self.p3 <= 1 + tol):
            raise ValueError("inert populations outside [0, 1]")
        return self

    def dense(self) -> np.ndarray:
        rho = np.zeros((4, 4), dtype=complex)
        rho[np.ix_([0, 3], [0, 3])] = self.block
        rho[1, 1], rho[2, 2] = self.p2, self.p3
        return rho


def _inverse_partition(x):
    """1/Z for Z = 2 + e^x + e^-x, overflow-safe for any |x|."""
    w = np.exp(-np.abs(x))
    return w / (1.0 + w) ** 2


def partition_function(eps: float, T: float) -> float:
    if not T > 0:
        raise ValueError(f"temperature must be positive, got {T}")
    x = abs(eps) / T
    if x > 700:
        return math.inf
    return 2.0 + 2.0 * math.cosh(x)


def thermal_blocks(diag, offdiag, T: float):
    """Gibbs state of many modes at once.

    Returns ``(blocks, p_inert)``: blocks has shape (n, 2, 2) and both inert
    levels carry population ``p_inert``.  In the eigenbasis the populations are
    (e^{eps/T}, 1, 1, e^{-eps/T}) / Z; the block equals
    ``(g+e)/2 I - (g-e)/(2 eps) H`` with ``g - e = tanh(eps / 2T)``.
    """
    if not T > 0:
        raise ValueError(f"temperature must be positive, got {T}")
    diag = np.atleast_1d(np.asarray(diag, dtype=float))
    offdiag = np.atleast_1d(np.asarray(offdiag, dtype=float))
    eps = np.hypot(diag, offdiag)
    x = eps / T
    p_inert = _inverse_partition(x)
    total = 1.0 - 2.0 * p_inert
    polar = np.tanh(x / 2)
    with np.errstate(invalid="ignore", divide="ignore"):
        coef = np.where(eps > 0, polar / np.where(eps > 0, eps, 1.0), 0.0)
    blocks = np.empty(diag.shape + (2, 2), dtype=complex)
    blocks[:, 0, 0] = total / 2 - coef * diag / 2
    blocks[:, 1, 1] = total / 2 + coef * diag / 2
    blocks[:, 0, 1] = blocks[:, 1, 0] = -coef * offdiag / 2
    return blocks, p_inert


def thermal_mode_state(hk: ModeHamiltonian, T: float) -> ModeState:
    blocks, p = thermal_blocks(hk.diag, hk.offdiag, T)
    return ModeState(blocks[0], float(p[0]), float(p[0]))


def block_energies(blocks: np.ndarray, diag, offdiag) -> np.ndarray:
    """Re Tr(H rho) per mode; inert levels carry zero energy."""
    return (diag * (blocks[..., 0, 0].real - blocks[..., 1, 1].real)
            + 2.0 * offdiag * blocks[..., 0, 1].real)


def mode_energy_expectation(s: ModeState, hk: ModeHamiltonian) -> float:
    return float(block_energies(s.block, hk.diag, hk.offdiag))


@numba.njit(cache=True, nogil=True)
def _propagate(m, n, coupling, a0, a1, duration, nsteps, rk4):
    nm = m.shape[0]
    ua = np.empty(nm, dtype=np.complex128)
    ub = np.empty(nm, dtype=np.complex128)
    dt = duration / nsteps
    slope = (a1 - a0) / nsteps
    for i in range(nm):
        a = 1.0 + 0.0j
        b = 0.0j
        o = n[i]
        if not rk4:
            for j in range(nsteps):
                d = coupling * (a0 + slope * (j + 0.5)) + m[i]
                e = math.sqrt(d * d + o * o)
                if e > 1e-300:
                    sn = math.sin(e * dt) / e
                else:
                    sn = dt
                alpha = math.cos(e * dt) - 1j * sn * d
                beta = -1j * sn * o
                a, b = alpha * a - beta * b.conjugate(), alpha * b + beta * a.conjugate()
        else:
            for j in range(nsteps):
                d0 = coupling * (a0 + slope * j) + m[i]
                dh = coupling * (a0 + slope * (j + 0.5)) + m[i]
                d1 = coupling * (a0 + slope * (j + 1.0)) + m[i]
                # K = -iH U in quaternion form: x = -i d, y = -i o
                x = -1j * d0
                y = -1j * o
                k1a = x * a - y * b.conjugate()
                k1b = x * b + y * a.conjugate()
                x = -1j * dh
                ta = a + 0.5 * dt * k1a
                tb = b + 0.5 * dt * k1b
                k2a = x * ta - y * tb.conjugate()
                k2b = x * tb + y * ta.conjugate()
                ta = a + 0.5 * dt * k2a
                tb = b + 0.5 * dt * k2b
                k3a = x * ta - y * tb.conjugate()
                k3b = x * tb + y * ta.conjugate()
                x = -1j * d1
                ta = a + dt * k3a
                tb = b + dt * k3b
                k4a = x * ta - y * tb.conjugate()
                k4b = x * tb + y * ta.conjugate()
                a = a + dt / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
                b = b + dt / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
        ua[i] = a
        ub[i] = b
    return ua, ub


def ramp_propagators(ks, ramp: RampProtocol, opts: IntegratorOptions = IntegratorOptions(),
                     medium: WorkingMedium = TFIM):
    """Block propagators (a, b) of every mode in ``ks`` over the whole ramp."""
    ks = np.atleast_1d(np.asarray(ks, dtype=float))
    m, n = medium.mode_terms(ks)
    m = np.ascontiguousarray(np.broadcast_to(m, ks.shape), dtype=float)
    n = np.ascontiguousarray(np.broadcast_to(n, ks.shape), dtype=float)
    nsteps = opts.n_steps(ramp.duration)
    a, b = _propagate(m, n, float(medium.field_coupling), float(ramp.alpha_start),
                      float(ramp.alpha_end), float(ramp.duration), nsteps,
                      opts.scheme == "rk4_crosscheck")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise FloatingPointError("non-finite propagator")
    return a, b


def propagator_matrices(a, b) -> np.ndarray:
    a = np.atleast_1d(a)
    b = np.atleast_1d(b)
    U = np.empty(a.shape + (2, 2), dtype=complex)
    U[:, 0, 0], U[:, 0, 1] = a, b
    U[:, 1, 0], U[:, 1, 1] = -b.conj(), a.conj()
    return U


def apply_propagators(blocks, a, b) -> np.ndarray:
    U = propagator_matrices(a, b)
    out = U @ blocks @ U.conj().transpose(0, 2, 1)
    # restore exact Hermiticity lost to roundoff in the products
    return 0.5 * (out + out.conj().transpose(0, 2, 1))


def evolve_mode(s: ModeState, k: float, ramp: RampProtocol,
                opts: IntegratorOptions = IntegratorOptions(),
                medium: WorkingMedium = TFIM) -> ModeState:
    """State of mode ``k`` at the end of ``ramp`` under von Neumann dynamics."""
    s.validate(1e-9)
    a, b = ramp_propagators([k], ramp, opts, medium)
    block = apply_propagators(s.block[None], a, b)[0]
    return ModeState(block, s.p2, s.p3)


def evolve_mode_dense(s: ModeState, k: float, ramp: RampProtocol,
                      opts: IntegratorOptions = IntegratorOptions(),
                      medium: WorkingMedium = TFIM) -> np.ndarray:
    """Reference path on the full 4x4 matrix with scipy's expm (slow; tests only)."""
    from scipy.linalg import expm

    from .model import mode_hamiltonian

    rho = s.dense()
    nsteps = opts.n_steps(ramp.duration)
    dt = ramp.duration / nsteps
    for j in range(nsteps):
        alpha = ramp.alpha_start + (ramp.alpha_end - ramp.alpha_start) * (j + 0.5) / nsteps
        U = expm(-1j * dt * mode_hamiltonian(medium, k, alpha).dense())
        rho = U @ rho @ U.conj().T
    return rho


def eigen_populations(s: ModeState, hk: ModeHamiltonian, coherence_tol: float = 1e-9):
    """(ground, excited) populations of a block diagonal in the eigenbasis of hk."""
    H = hk.block()
    comm = H @ s.block - s.block @ H
    if np.max(np.abs(comm)) > coherence_tol * max(1.0, hk.gap()):
        raise ValueError("state has coherence in the eigenbasis of the start Hamiltonian")
    eps = hk.gap()
    tr = float(np.trace(s.block).real)
    if eps == 0.0:
        if np.max(np.abs(s.block - tr / 2 * np.eye(2))) > coherence_tol:
            raise ValueError("populations undefined at a degenerate point")
        return tr / 2, tr / 2
    diff = -mode_energy_expectation(s, hk) / eps
    return (tr + diff) / 2, (tr - diff) / 2


def adiabatic_map(s: ModeState, hk_start: ModeHamiltonian, hk_end: ModeHamiltonian) -> ModeState:
    """Carry eigen-populations of hk_start over to the matching eigenstates of hk_end."""
    g, e = eigen_populations(s, hk_start)
    eps = hk_end.gap()
    H = hk_end.block()
    block = (g + e) / 2 * np.eye(2) - ((g - e) / (2 * eps) * H if eps > 0 else 0.0)
    return ModeState(block, s.p2, s.p3)


def mode_excess_excitation(s_final: ModeState, hk_final: ModeHamiltonian,
                           s_adia: ModeState) -> float:
    """Population promoted from the lower to the upper level beyond the adiabatic state."""
    gap = hk_final.gap()
    if gap < 1e-12:
        raise ValueError("quasiparticle number undefined for a closed gap")
    de = mode_energy_expectation(s_final, hk_final) - mode_energy_expectation(s_adia, hk_final)
    return de / (2.0 * gap)
