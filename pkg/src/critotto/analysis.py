"""Parameter sweeps, power-law fits, tau_min detection and the LZ x tanh overlay."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Literal, Optional, Sequence

import numpy as np
from scipy import integrate

from .cycle import CycleConfig, CycleResult, adiabatic_work, run_cycle
from .model import CriticalExponents, momentum_grid, tfim_gap

Axis = Literal["tau2", "T_C", "tau2_and_T_C"]

# p_k ~ exp(-c sin^2 k) is symmetric about pi/2, but only the branch next to the
# critical mode k = 0 ever approaches the avoided crossing
CRITICAL_BRANCH_CUTOFF = math.pi / 2


def log_grid(lo: float, hi: float, n: int) -> np.ndarray:
    if not (0 < lo <= hi) or n < 1:
        raise ValueError(f"bad log grid {lo}:{hi}:{n}")
    if n == 1:
        return np.array([float(lo)])
    return np.geomspace(lo, hi, n)


def _check_grid(grid) -> tuple[float, ...]:
    g = tuple(float(v) for v in grid)
    if not g:
        raise ValueError("sweep grid is empty")
    if any(not (v > 0 and math.isfinite(v)) for v in g):
        raise ValueError("sweep grid values must be positive and finite")
    if any(b <= a for a, b in zip(g, g[1:])):
        raise ValueError("sweep grid must be strictly increasing")
    return g


@dataclass(frozen=True)
class SweepSpec:
    base: CycleConfig
    axis: Axis
    grid: Sequence[float]
    # second axis (T_C values) for the combined tau2 x T_C sweep
    grid2: Optional[Sequence[float]] = None

    def __post_init__(self):
        if self.axis not in ("tau2", "T_C", "tau2_and_T_C"):
            raise ValueError(f"unknown sweep axis {self.axis!r}")
        object.__setattr__(self, "grid", _check_grid(self.grid))
        if self.axis == "tau2_and_T_C":
            if self.grid2 is None:
                raise ValueError("combined sweep needs grid2 (T_C values)")
            object.__setattr__(self, "grid2", _check_grid(self.grid2))

    def overrides(self) -> list[dict[str, float]]:
        if self.axis == "tau2":
            return [{"tau2": v} for v in self.grid]
        if self.axis == "T_C":
            return [{"T_C": v} for v in self.grid]
        return [{"T_C": tc, "tau2": t} for tc in self.grid2 for t in self.grid]

    def points(self) -> list[CycleConfig]:
        """Validated configs, raising on the first invalid point."""
        return [self.base.with_(**ov) for ov in self.overrides()]


@dataclass
class SweepRow:
    params: dict[str, float]
    config: Optional[CycleConfig] = None
    result: Optional[CycleResult] = None
    error: Optional[str] = None


@dataclass
class SweepTable:
    spec: SweepSpec
    rows: list[SweepRow] = field(default_factory=list)

    def values(self, attr: str = "excess") -> np.ndarray:
        return np.array([getattr(r.result, attr) if r.result else math.nan for r in self.rows])

    def axis_values(self) -> np.ndarray:
        key = "T_C" if self.spec.axis == "T_C" else "tau2"
        return np.array([r.params[key] for r in self.rows])


def _safe_cycle(base: CycleConfig, params: dict[str, float]) -> SweepRow:
    cfg = None
    try:
        cfg = base.with_(**params)
        return SweepRow(params, cfg, run_cycle(cfg))
    except (ValueError, FloatingPointError, ArithmeticError) as exc:
        return SweepRow(params, cfg, error=f"{type(exc).__name__}: {exc}")


def parallel_map(fn: Callable, items, threads: Optional[int] = None) -> list:
    """Order-preserving map; the numba kernels release the GIL."""
    items = list(items)
    if threads == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def run_sweep(spec: SweepSpec, threads: Optional[int] = None) -> SweepTable:
    return SweepTable(spec, parallel_map(lambda ov: _safe_cycle(spec.base, ov), spec.overrides(),
                                         threads))


@dataclass(frozen=True)
class PowerLawFit:
    slope: float
    intercept: float
    r_squared: float
    window: tuple[float, float]
    n_points: int

    @property
    def prefactor(self) -> float:
        return math.exp(self.intercept)


def fit_power_law(xs, ys, window: Optional[tuple[float, float]] = None) -> PowerLawFit:
    """Least squares line through (ln x, ln y) restricted to ``window``.

    The default window is the upper decade of the data, ``[max(x)/10, max(x)]``.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape:
        raise ValueError("xs and ys differ in length")
    if xs.size == 0:
        raise ValueError("no data to fit")
    if window is None:
        window = (float(np.max(xs)) / 10, float(np.max(xs)))
    lo, hi = window
    sel = (xs >= lo * (1 - 1e-12)) & (xs <= hi * (1 + 1e-12))
    x, y = xs[sel], ys[sel]
    if x.size < 3:
        raise ValueError(f"need at least 3 points in window {window}, got {x.size}")
    if np.any(x <= 0) or np.any(~(y > 0)):
        raise ValueError("power-law fit needs positive data inside the window")
    lx, ly = np.log(x), np.log(y)
    mx, my = lx.mean(), ly.mean()
    sxx = np.sum((lx - mx) ** 2)
    slope = np.sum((lx - mx) * (ly - my)) / sxx
    intercept = my - slope * mx
    ss_res = np.sum((ly - intercept - slope * lx) ** 2)
    ss_tot = np.sum((ly - my) ** 2)
    # flat data: both sums are pure roundoff
    flat = ss_tot <= 1e-24 * (np.sum(ly**2) + 1.0)
    r2 = 1.0 if flat else min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return PowerLawFit(float(slope), float(intercept), float(r2),
                       (float(x.min()), float(x.max())), int(x.size))


def lz_probability(k, tau2: float, h1: float, h2: float):
    """Landau-Zener excitation probability exp(-2 pi tau sin^2 k / (h1 - h2))."""
    if h1 == h2:
        raise ValueError("LZ probability needs h1 != h2")
    if tau2 < 0:
        raise ValueError("tau2 must be non-negative")
    p = np.exp(-2 * np.pi * tau2 * np.sin(k) ** 2 / abs(h1 - h2))
    return np.clip(p, 0.0, 1.0)


def _excess_integrand(k, cfg: CycleConfig):
    return (2 * tfim_gap(k, cfg.h1) * lz_probability(k, cfg.tau2, cfg.h1, cfg.h2)
            * np.tanh(tfim_gap(k, cfg.h2) / (2 * cfg.T_C)))


def analytic_excess_energy(cfg: CycleConfig, k_cut: float = CRITICAL_BRANCH_CUTOFF) -> float:
    """Sum over grid modes k <= k_cut of 2 eps_k(h1) p_k tanh(eps_k(h2) / 2T_C)."""
    ks = momentum_grid(cfg.L)
    ks = ks[ks <= k_cut]
    return math.fsum(_excess_integrand(ks, cfg).tolist())


def analytic_excess_energy_continuum(cfg: CycleConfig, k_cut: float = CRITICAL_BRANCH_CUTOFF) -> float:
    """(L / 2pi) times the k-integral of the same integrand (mode spacing is 2pi/L)."""
    val, _ = integrate.quad(_excess_integrand, 0.0, k_cut, args=(cfg,), epsrel=1e-8,
                            epsabs=0.0, limit=400)
    return cfg.L / (2 * math.pi) * val


@dataclass(frozen=True)
class OverlayFit:
    prefactor: float
    analytic: np.ndarray
    numeric: np.ndarray

    @property
    def scaled(self) -> np.ndarray:
        return self.prefactor * self.analytic

    @property
    def rel_deviation(self) -> np.ndarray:
        return np.abs(self.scaled - self.numeric) / np.abs(self.numeric)


def fit_overlay_prefactor(analytic, numeric) -> OverlayFit:
    """One global prefactor, chosen as the geometric-mean ratio numeric / analytic."""
    a = np.asarray(analytic, dtype=float)
    n = np.asarray(numeric, dtype=float)
    if np.any(a <= 0) or np.any(n <= 0):
        raise ValueError("overlay needs positive analytic and numeric values")
    return OverlayFit(float(np.exp(np.mean(np.log(n / a)))), a, n)


@dataclass(frozen=True)
class TauMinResult:
    T_C: float
    tau_min: float
    tau_min_grid: float
    epsilon: float
    resolution: float
    status: Literal["found", "left_censored", "not_found"]
    excess_at_tau_min: float
    excess_before: float

    @property
    def found(self) -> bool:
        return self.status != "not_found"


def cycle_excess(base: CycleConfig, T_C: float) -> Callable[[float], float]:
    return lambda tau2: run_cycle(base.with_(T_C=T_C, tau2=tau2)).excess


def find_tau_min(base: CycleConfig, T_C: float, epsilon: float = 2.0, tau2_grid=None,
                 excess_fn: Optional[Callable[[float], float]] = None,
                 rel_resolution: float = 1e-2) -> TauMinResult:
    """Smallest tau2 with W - W_tilde < epsilon, refined by bisection in log tau2.

    ``excess_fn`` replaces the cycle simulation (used with synthetic stubs).
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    grid = _check_grid(log_grid(1.0, 1e4, 41) if tau2_grid is None else tau2_grid)
    f = cycle_excess(base, T_C) if excess_fn is None else excess_fn

    prev_tau, prev_val = None, math.nan
    for tau in grid:
        val = f(tau)
        if val < epsilon:
            break
        prev_tau, prev_val = tau, val
    else:
        return TauMinResult(T_C, math.nan, math.nan, epsilon, math.nan, "not_found",
                            math.nan, prev_val)

    if prev_tau is None:
        return TauMinResult(T_C, tau, tau, epsilon, 0.0, "left_censored", val, math.nan)

    lo, hi, hi_val = prev_tau, tau, val
    while hi / lo - 1 > rel_resolution:
        mid = math.sqrt(lo * hi)
        mval = f(mid)
        if mval < epsilon:
            hi, hi_val = mid, mval
        else:
            lo, prev_val = mid, mval
    return TauMinResult(T_C, hi, tau, epsilon, hi - lo, "found", hi_val, prev_val)


def tau_min_scaling(R1: float, T_C: float, exponents: CriticalExponents,
                    epsilon: float = 1.0) -> float:
    """tau2 at which (R1 / T_C) tau2^x equals epsilon, x the thermal KZ exponent."""
    c = exponents
    return (R1 / (epsilon * T_C)) ** ((c.nu * c.z + 1) / (c.nu * (c.d + c.z)))


@dataclass(frozen=True)
class PowerPoint:
    T_C: float
    tau_min_grid: float
    tau_min: float
    status: str
    W_tilde: float
    # cycle time at tau2 = tau_min under the configured power denominator
    cycle_time: float = math.nan

    @property
    def power(self) -> float:
        if self.status == "not_found":
            return math.nan
        t = self.tau_min if math.isnan(self.cycle_time) else self.cycle_time
        return abs(self.W_tilde) / t


@dataclass(frozen=True)
class PowerCurve:
    points: tuple[PowerPoint, ...]
    epsilon: float

    @property
    def T_C(self) -> np.ndarray:
        return np.array([p.T_C for p in self.points])

    @property
    def power(self) -> np.ndarray:
        return np.array([p.power for p in self.points])

    @property
    def tau_min(self) -> np.ndarray:
        return np.array([p.tau_min for p in self.points])

    def argmax(self) -> int:
        return int(np.nanargmax(self.power))

    def has_interior_maximum(self) -> bool:
        i = self.argmax()
        return 0 < i < len(self.points) - 1


def power_curve_at_tau_min(base: CycleConfig, T_C_grid, epsilon: float = 2.0, tau2_grid=None,
                           threads: Optional[int] = None,
                           excess_factory: Optional[Callable] = None,
                           w_tilde_fn: Optional[Callable[[float], float]] = None) -> PowerCurve:
    """|P| = |W_tilde| / cycle time at tau2 = tau_min (just tau_min by default) for every T_C.

    ``excess_factory(T_C)`` and ``w_tilde_fn(T_C)`` substitute synthetic models
    for the simulation and for the closed-form adiabatic work.
    """
    grid = _check_grid(T_C_grid)

    def one(tc: float) -> PowerPoint:
        fn = excess_factory(tc) if excess_factory else None
        t = find_tau_min(base, tc, epsilon, tau2_grid, excess_fn=fn)
        wt = w_tilde_fn(tc) if w_tilde_fn else adiabatic_work(base.with_(T_C=tc))[2]
        ct = base.with_(T_C=tc, tau2=t.tau_min).cycle_time() if t.found else math.nan
        return PowerPoint(tc, t.tau_min_grid, t.tau_min, t.status, wt, ct)

    return PowerCurve(tuple(parallel_map(one, grid, threads)), epsilon)
