"""
Wave operators W+ = s-lim exp(itH) exp(-itH0) by Cook integration, the first
two Dyson terms, and the structure function of W1.

Every time integral is a backward trapezoid sweep over t_j = j dt in [0, T],
regularized by exp(-eps t) with eps = s / T for s in the schedule and
extrapolated to eps = 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import integrate, special
from scipy.interpolate import CubicSpline

from utils.dispersive import StrangStepper
from utils.errors import DivergentNormError, GridError, HorizonError
from utils.freefield import WavePacket, free_propagate
from utils.logging_config import get_logger
from utils.numerics import RadialGrid, dst, fit_power_law, idst, oscillatory_integral, radial_grid, radial_lp_norm, richardson
from utils.potentials import Potential, fourier_transform

logger = get_logger(__name__)

KAPPA = 1j / (16.0 * np.pi**3)
EPS_SCHEDULE = (0.2, 0.1, 0.05)
ROUND_TRIP_TOL = 1e-10
SLOW_DECAY = 1.3
_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def wave_grid(r_max: float = 500.0, n: int = 4096) -> RadialGrid:
    return radial_grid(r_max, n)


def _l2(grid: RadialGrid, u: np.ndarray) -> float:
    """3D L2 norm of psi = u / r from u samples."""
    return float(np.sqrt(4.0 * np.pi * np.sum(np.abs(u) ** 2 * grid.weights)))


def _nodes(T: float, dt: float) -> Tuple[int, float]:
    if T <= 0 or dt <= 0:
        raise ValueError(f"T and dt must be positive, got T={T}, dt={dt}")
    N = max(1, int(np.ceil(T / dt - 1e-9)))
    return N, T / N


def _eps_values(T: float, schedule: Optional[Sequence[float]]) -> np.ndarray:
    sched = EPS_SCHEDULE if schedule is None else tuple(schedule)
    return np.asarray(sched, dtype=float) / T if sched else np.zeros(1)


def _extrapolate(columns: np.ndarray, eps: np.ndarray) -> np.ndarray:
    if eps.size == 1:
        return columns[:, 0]
    return richardson([columns[:, k] for k in range(eps.size)], eps)


# -----------------------------
# Cook integration
# -----------------------------
@dataclass(eq=False)
class WaveOperatorResult:
    f: WavePacket
    wf: WavePacket
    T: float
    eps: List[float]
    tail: float
    isometry_defect: float
    intertwining_defect: Optional[float] = None
    decay_exponent: Optional[float] = None
    integrand: pd.DataFrame = field(default_factory=pd.DataFrame)
    warnings: List[str] = field(default_factory=list)
    regularized: Optional[WavePacket] = None
    extrapolated_isometry_defect: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "T": self.T,
            "eps": self.eps,
            "norm_f": self.f.l2,
            "norm_wf": self.wf.l2,
            "tail": self.tail,
            "isometry_defect": self.isometry_defect,
            "extrapolated_isometry_defect": self.extrapolated_isometry_defect,
            "intertwining_defect": self.intertwining_defect,
            "decay_exponent": self.decay_exponent,
            "warnings": list(self.warnings),
        }


def round_trip_fraction(f: WavePacket, T: float) -> float:
    """
    Spectral mass of f above k = r_max / T: the part of exp(-itH0) f that
    reaches the wall at r_max and is back at the origin before t = T.
    """
    g = f.grid
    power = np.abs(dst(g.nodes * f.values, g.h)) ** 2
    total = float(power.sum())
    if total == 0.0:
        return 0.0
    return float(power[g.wavenumbers > g.r_max / T].sum() / total)


def _check_round_trip(f: WavePacket, T: float) -> None:
    frac = round_trip_fraction(f, T)
    if frac > ROUND_TRIP_TOL:
        raise GridError(
            f"r_max={f.grid.r_max:g} is too small for T={T:g}: {frac:.2e} of the spectrum "
            f"returns from the wall; need r_max above {T:g} times the packet's largest wavenumber"
        )


def _cook_sweep(V: Potential, f: WavePacket, T: float, dt: float, eps: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Columns i int_0^T exp(i t H - eps_k t) V exp(-i t H0) f dt in u-space, plus the integrand trace."""
    _check_round_trip(f, T)
    g = f.grid
    N, step = _nodes(T, dt)
    v = V.sample(g)
    c0 = dst(g.nodes * f.values, g.h)
    k2 = g.wavenumbers**2
    stepper = StrangStepper(g, V, step)

    def integrand(t: float) -> Tuple[np.ndarray, float]:
        vu = v * idst(c0 * np.exp(-1j * k2 * t), g.h)
        return vu[:, None] * np.exp(-eps * t)[None, :], _l2(g, vu)

    times = step * np.arange(N + 1)
    norms = np.empty(N + 1)
    acc = np.zeros((g.n, eps.size), dtype=complex)
    F_next, norms[N] = integrand(times[N])
    for j in range(N - 1, -1, -1):
        F_j, norms[j] = integrand(times[j])
        acc = stepper.advance(acc + 0.5j * step * F_next, -step) + 0.5j * step * F_j
        F_next = F_j
    return acc, times, norms


def _tail_estimate(times: np.ndarray, norms: np.ndarray, T: float) -> Tuple[float, Optional[float], List[str]]:
    if norms[-1] == 0:
        return 0.0, None, []
    mask = times >= T / 4
    idx = np.flatnonzero(mask)
    pick = idx[np.linspace(0, idx.size - 1, min(32, idx.size)).astype(int)]
    fit = fit_power_law(times[pick], norms[pick], (T / 4, T))
    if fit.exponent < 1.0:
        raise HorizonError(
            float(norms[-1]),
            f"Cook integrand decays like t^-{fit.exponent:.3f} on [{T / 4:g}, {T:g}]; not integrable",
        )
    warnings = []
    if fit.exponent < SLOW_DECAY:
        msg = f"Cook integrand decays like t^-{fit.exponent:.3f} on [{T / 4:g}, {T:g}], slower than t^-{SLOW_DECAY:g}"
        logger.warning(msg)
        warnings.append(msg)
    return float(norms[-1] * T / (fit.exponent - 1.0)), fit.exponent, warnings


def cook_wave_operator(
    V: Potential,
    f: WavePacket,
    T: float = 50.0,
    eps_schedule: Optional[Sequence[float]] = None,
    dt: float = 0.01,
    s_list: Optional[Sequence[float]] = None,
) -> WaveOperatorResult:
    """
    W+ f = f + i int_0^inf exp(itH - eps t) V exp(-itH0) f dt, truncated at T.

    ``wf`` is the eps -> 0 extrapolation, i.e. exp(iTH) exp(-iTH0) f up to
    discretization; its norm defect is ``extrapolated_isometry_defect``. The
    isometry and intertwining defects are those of the Abel-regularized
    approximant ``regularized`` at the largest eps of the schedule, eps = s/T,
    and shrink like 1/T.

    Args:
        V: radial potential
        f: radial packet on a midpoint RadialGrid
        T: horizon
        eps_schedule: regularization in units of 1/T; empty for none
        dt: time step of the sweep and of the split-step propagator
        s_list: shifts for the intertwining defect (optional)

    Raises:
        GridError: part of exp(-itH0) f returns from the wall at r_max before T
        HorizonError: the integrand ||V exp(-itH0) f||_2 decays slower than t^-1
    """
    eps = _eps_values(T, eps_schedule)
    g = f.grid
    if V.is_zero:
        wf = f.with_values(f.values.copy())
        res = WaveOperatorResult(f, wf, T, list(eps), 0.0, 0.0, regularized=wf, extrapolated_isometry_defect=0.0)
        res.intertwining_defect = 0.0 if s_list else None
        return res

    acc, times, norms = _cook_sweep(V, f, T, dt, eps)
    tail, alpha, warnings = _tail_estimate(times, norms, T)
    u_f = g.nodes * f.values
    wf = WavePacket(g, (u_f + _extrapolate(acc, eps)) / g.nodes, "3d")
    reg = WavePacket(g, (u_f + acc[:, 0]) / g.nodes, "3d")
    thin = slice(None, None, max(1, times.size // 256))
    res = WaveOperatorResult(
        f=f,
        wf=wf,
        T=T,
        eps=list(eps),
        tail=tail,
        isometry_defect=abs(reg.l2 - f.l2),
        decay_exponent=alpha,
        integrand=pd.DataFrame({"t": times[thin], "integrand_norm": norms[thin]}),
        warnings=warnings,
        regularized=reg,
        extrapolated_isometry_defect=abs(wf.l2 - f.l2),
    )
    if s_list:
        res.intertwining_defect = _intertwining(V, f, reg, T, eps_schedule, dt, s_list)
    logger.info("Cook W: T=%g isometry defect %.3e tail %.3e", T, res.isometry_defect, tail)
    return res


def _intertwining(V, f, reg, T, eps_schedule, dt, s_list) -> float:
    g = f.grid
    stepper = StrangStepper(g, V, dt)
    worst = 0.0
    for s in s_list:
        lhs = stepper.advance(g.nodes * reg.values, -s)
        shifted = free_propagate(f, -s)
        rhs = cook_wave_operator(V, shifted, T, eps_schedule, dt).regularized
        worst = max(worst, _l2(g, lhs - g.nodes * rhs.values))
    return worst


def intertwining_defect(V: Potential, f: WavePacket, T: float = 50.0, s_list: Sequence[float] = (0.5, 1.0, 2.0), dt: float = 0.01) -> float:
    """max over s of ||exp(isH) W f - W exp(isH0) f||_2 for the regularized W."""
    return cook_wave_operator(V, f, T, dt=dt, s_list=s_list).intertwining_defect


def cauchy_increment(V: Potential, f: WavePacket, T: float = 50.0, dt: float = 0.01) -> float:
    """||W_{2T} f - W_T f||_2."""
    a = cook_wave_operator(V, f, T, dt=dt).wf
    b = cook_wave_operator(V, f, 2.0 * T, dt=dt).wf
    g = f.grid
    return _l2(g, g.nodes * (b.values - a.values))


# -----------------------------
# Dyson terms
# -----------------------------
def _dyson_sweep(V: Potential, f: WavePacket, T: float, dt: float, eps: np.ndarray, second: bool) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """
    W1 and W2 columns in u-space with exact free flows.

    h(s) = i int_s^T exp(i(sigma - s)H0) V exp(-i sigma H0) f d sigma gives W1 f = h(0);
    W2 f = i int_0^T exp(i sigma H0) V h(sigma) d sigma.
    """
    g = f.grid
    N, step = _nodes(T, dt)
    v = V.sample(g)[:, None]
    c0 = dst(g.nodes * f.values, g.h)
    k2 = g.wavenumbers**2
    back = np.exp(1j * k2 * step)[:, None]

    def source(t: float) -> np.ndarray:
        free = idst(c0 * np.exp(-1j * k2 * t), g.h)[:, None]
        return dst(v * free * np.exp(-eps * t)[None, :], g.h)

    acc1 = np.zeros((g.n, eps.size), dtype=complex)
    acc2 = np.zeros_like(acc1) if second else None
    S_next = source(T)
    G_next = np.zeros_like(acc1)
    for j in range(N - 1, -1, -1):
        t = j * step
        S_j = source(t)
        acc1 = back * (acc1 + 0.5j * step * S_next) + 0.5j * step * S_j
        S_next = S_j
        if second:
            G_j = dst(v * idst(acc1, g.h) * np.exp(-eps * t)[None, :], g.h)
            acc2 = back * (acc2 + 0.5j * step * G_next) + 0.5j * step * G_j
            G_next = G_j
    w1 = idst(acc1, g.h)
    w2 = idst(acc2, g.h) if second else None
    return w1, w2


def dyson_terms(
    V: Potential,
    f: WavePacket,
    T: float = 50.0,
    eps_schedule: Optional[Sequence[float]] = None,
    dt: float = 0.01,
    second: bool = True,
) -> Tuple[WavePacket, Optional[WavePacket]]:
    """(W1 f, W2 f) truncated at T and extrapolated to eps = 0."""
    g = f.grid
    if V.is_zero:
        zero = f.with_values(np.zeros(g.n))
        return zero, (zero if second else None)
    eps = _eps_values(T, eps_schedule)
    w1, w2 = _dyson_sweep(V, f, T, dt, eps, second)
    p1 = WavePacket(g, _extrapolate(w1, eps) / g.nodes, "3d")
    p2 = WavePacket(g, _extrapolate(w2, eps) / g.nodes, "3d") if second else None
    return p1, p2


def dyson_term(
    V: Potential,
    f: WavePacket,
    n: int,
    T: float = 50.0,
    eps_schedule: Optional[Sequence[float]] = None,
    dt: float = 0.01,
) -> WavePacket:
    """W_n f for n in {1, 2}."""
    if n not in (1, 2):
        raise ValueError(f"dyson_term supports n in {{1, 2}}, got {n}")
    w1, w2 = dyson_terms(V, f, T, eps_schedule, dt, second=(n == 2))
    return w1 if n == 1 else w2


def truncated_remainder(V: Potential, f: WavePacket, T: float = 50.0, dt: float = 0.01) -> WavePacket:
    """W f - f - W1 f - W2 f at a common horizon and eps schedule."""
    wf = cook_wave_operator(V, f, T, dt=dt).wf
    w1, w2 = dyson_terms(V, f, T, dt=dt)
    return f.with_values(wf.values - f.values - w1.values - w2.values)


def remainder_slope(V: Potential, f: WavePacket, amplitudes: Sequence[float] = (0.2, 0.4), T: float = 50.0, dt: float = 0.01) -> Tuple[float, List[float]]:
    """Log-log slope of ||W - I - W1 - W2|| against the potential amplitude."""
    base = V.scaled(1.0 / V.amplitude)
    norms = [truncated_remainder(base.scaled(a), f, T, dt).l2 for a in amplitudes]
    slope = float(np.polyfit(np.log(amplitudes), np.log(norms), 1)[0])
    return slope, norms


# -----------------------------
# Structure function
# -----------------------------
@dataclass(eq=False)
class StructureFunction:
    """
    L(r) = int_0^inf V^(s) exp(i r s / 2) s ds on a symmetric r-grid.

    ``kappa`` multiplies L in the translation/reflection representation of W1;
    norms are taken of kappa L over R x S^2.
    """

    r: np.ndarray
    values: np.ndarray
    kappa: complex = KAPPA
    method: str = "closed"
    l1: float = field(init=False)
    l2: float = field(init=False)
    _re: Any = field(init=False, repr=False)
    _im: Any = field(init=False, repr=False)

    def __post_init__(self) -> None:
        a = np.abs(self.kappa * self.values)
        R = self.r[-1]
        # r^-2 tails on both sides beyond the sampled range
        tail1 = (a[0] + a[-1]) * R
        tail2 = (a[0] ** 2 + a[-1] ** 2) * R / 3.0
        self.l1 = float(4.0 * np.pi * (integrate.trapezoid(a, self.r) + tail1))
        self.l2 = float(np.sqrt(4.0 * np.pi * (integrate.trapezoid(a**2, self.r) + tail2)))
        self._re = CubicSpline(self.r, self.values.real)
        self._im = CubicSpline(self.r, self.values.imag)

    @property
    def half_width(self) -> float:
        return float(self.r[-1])

    def __call__(self, tau: np.ndarray) -> np.ndarray:
        """kappa L(tau), zero outside the sampled range."""
        tau = np.asarray(tau, dtype=float)
        out = self.kappa * (self._re(tau) + 1j * self._im(tau))
        return np.where(np.abs(tau) <= self.half_width, out, 0.0)

    def with_kappa(self, kappa: complex) -> "StructureFunction":
        return StructureFunction(self.r, self.values, kappa, self.method)


def structure_L_gaussian(V: Potential, r: np.ndarray) -> np.ndarray:
    """Closed form A pi^3/2 a (2 + i sqrt(pi) (r/a) w(r/(2a))) with w the Faddeeva function."""
    if V.kind != "gaussian":
        raise ValueError(f"closed form needs a gaussian potential, got {V.kind}")
    A, a = V.amplitude, V.scale
    b = np.asarray(r, dtype=float) / a
    return A * np.pi**1.5 * a * (2.0 + 1j * np.sqrt(np.pi) * b * special.wofz(b / 2.0))


def structure_L(
    V: Potential,
    r_half: float = 48.0,
    n: int = 1921,
    method: str = "auto",
    kappa: complex = KAPPA,
) -> StructureFunction:
    """
    Sample L on [-r_half, r_half].

    ``method`` is "closed" (gaussian only), "quadrature" (oscillatory
    quadrature of the radial Fourier transform) or "auto".

    Raises:
        DivergentNormError: V^(s) s is not integrable
    """
    r = np.linspace(-r_half, r_half, n)
    if V.is_zero:
        return StructureFunction(r, np.zeros(n, dtype=complex), kappa, "zero")
    if method == "auto":
        method = "closed" if V.kind == "gaussian" else "quadrature"
    if method == "closed":
        return StructureFunction(r, structure_L_gaussian(V, r), kappa, "closed")
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")

    S = 40.0 / V.scale if V.kind in ("gaussian", "aubin_talenti") else 40.0
    if V.kind == "gaussian":
        amp: Any = lambda s: fourier_transform(V, s)
    else:
        s_nodes = np.linspace(0.0, S, 2001)
        amp = (s_nodes, fourier_transform(V, s_nodes))
    vals = np.empty(n, dtype=complex)
    try:
        for i, ri in enumerate(r):
            vals[i] = oscillatory_integral(amp, ri / 2.0, order=1.0, truncation=S).value
    except ValueError as err:
        raise DivergentNormError(f"V^(s) s is not integrable for {V.kind}: {err}") from err
    return StructureFunction(r, vals, kappa, "quadrature")


def _support_radius(f: WavePacket, rel: float = 1e-12) -> float:
    a = np.abs(f.values)
    big = np.flatnonzero(a > rel * a.max(initial=0.0))
    return float(f.grid.nodes[big[-1]] + f.grid.h) if big.size else 0.0


def apply_w1_structure(L: StructureFunction, f: WavePacket, rho_max: float = 20.0, panels: int = 4) -> WavePacket:
    """
    W1 f(x) = int_0^inf int_{S^2} kappa L(r - 2 w.x) f(x - r w) dr dw for radial f.

    With tau = r - 2 rho mu the angular integral collapses to
    (pi / rho) int L(tau) int f(sqrt(rho^2 + r tau)) dr dtau over r >= 0,
    |r - tau| <= 2 rho. The output lives on the nodes of f's grid up to rho_max.

    Raises:
        GridError: the sampled range of L misses part of the support of f
    """
    g = f.grid
    n_out = int(min(g.n, np.floor(rho_max / g.h)))
    out_grid = radial_grid(n_out * g.h, n_out)
    R_f = _support_radius(f)
    need = max(2.0 * out_grid.r_max, out_grid.r_max + R_f)
    if need > L.half_width:
        raise GridError(f"structure function sampled to |r| <= {L.half_width:g}, need {need:g}")
    if not np.any(L.values) or R_f == 0:
        return WavePacket(out_grid, np.zeros(n_out), "3d")

    f_re = CubicSpline(g.nodes, f.values.real)
    f_im = CubicSpline(g.nodes, f.values.imag)

    def f_at(q: np.ndarray) -> np.ndarray:
        return np.where(q <= R_f, f_re(q) + 1j * f_im(q), 0.0)

    tau = L.r
    dtau = tau[1] - tau[0]
    wt = np.full(tau.size, dtau)
    wt[[0, -1]] *= 0.5
    kl = L(tau) * wt
    x = (np.arange(panels)[:, None] + 0.5 * (_GL_X[None, :] + 1.0)).ravel() / panels
    w = np.tile(_GL_W, panels) / (2.0 * panels)

    vals = np.empty(n_out, dtype=complex)
    for i, rho in enumerate(out_grid.nodes):
        m = (tau >= max(-2.0 * rho, -rho - R_f)) & (tau <= rho + R_f)
        t = tau[m]
        lo = np.maximum(0.0, t - 2.0 * rho)
        hi = t + 2.0 * rho
        with np.errstate(divide="ignore", invalid="ignore"):
            cut = (R_f**2 - rho**2) / t
        hi = np.where(t > 0, np.minimum(hi, cut), hi)
        lo = np.where(t < 0, np.maximum(lo, cut), lo)
        span = np.maximum(hi - lo, 0.0)
        r = lo[:, None] + span[:, None] * x[None, :]
        q = np.sqrt(np.maximum(rho**2 + r * t[:, None], 0.0))
        G = (f_at(q) * w[None, :]).sum(axis=1) * span
        vals[i] = np.pi / rho * np.sum(kl[m] * G)
    return WavePacket(out_grid, vals, "3d")


# -----------------------------
# Calibration and cross-checks
# -----------------------------
@dataclass
class KappaCalibration:
    empirical: complex
    analytic: complex
    relative_gap: float
    residual: float


def _restricted(p: WavePacket, n: int) -> np.ndarray:
    return p.values[:n]


def _weighted_rel(a: np.ndarray, b: np.ndarray, grid: RadialGrid) -> float:
    w = grid.nodes**2 * grid.weights
    return float(np.sqrt(np.sum(np.abs(a - b) ** 2 * w) / np.sum(np.abs(b) ** 2 * w)))


def calibrate_kappa(
    V: Potential,
    f: WavePacket,
    T: float = 50.0,
    rho_max: float = 20.0,
    dt: float = 0.01,
    structure: Optional[StructureFunction] = None,
) -> KappaCalibration:
    """Fit kappa so that kappa * (structure formula with kappa = 1) matches the Dyson W1 on rho <= rho_max."""
    base = (structure or structure_L(V)).with_kappa(1.0)
    s = apply_w1_structure(base, f, rho_max)
    d = _restricted(dyson_term(V, f, 1, T, dt=dt), s.grid.n)
    w = s.grid.nodes**2 * s.grid.weights
    kappa = complex(np.sum(np.conj(s.values) * d * w) / np.sum(np.abs(s.values) ** 2 * w))
    resid = _weighted_rel(kappa * s.values, d, s.grid)
    gap = abs(kappa - KAPPA) / abs(KAPPA)
    logger.info("kappa calibration %.6g%+.6gj (analytic %.6gj), residual %.3e", kappa.real, kappa.imag, KAPPA.imag, resid)
    return KappaCalibration(kappa, KAPPA, float(gap), resid)


def w1_agreement(
    V: Potential,
    f: WavePacket,
    kappa: complex = KAPPA,
    T: float = 50.0,
    rho_max: float = 20.0,
    dt: float = 0.01,
) -> float:
    """Relative L2 difference of structure-formula and Dyson W1 on rho <= rho_max."""
    s = apply_w1_structure(structure_L(V, kappa=kappa), f, rho_max)
    d = _restricted(dyson_term(V, f, 1, T, dt=dt), s.grid.n)
    return _weighted_rel(s.values, d, s.grid)


# -----------------------------
# L^p probes
# -----------------------------
def lp_bound_probe(
    operator: Callable[[WavePacket], WavePacket],
    p_list: Sequence[float],
    packets: Sequence[WavePacket],
    sizes: Optional[Sequence[int]] = None,
) -> pd.DataFrame:
    """
    max over a packet family of ||Op f||_p / ||f||_p, per p and family size.

    Returns:
        DataFrame with columns p, ratio, family_size
    """
    if not packets:
        raise ValueError("lp_bound_probe needs at least one packet")
    sizes = sorted(set(sizes or (max(1, len(packets) // 2), len(packets))))
    images = [operator(f) for f in packets]
    rows = []
    for p in p_list:
        ratios = [radial_lp_norm(o.grid, o.values, p) / radial_lp_norm(f.grid, f.values, p) for f, o in zip(packets, images)]
        for size in sizes:
            rows.append({"p": float(p), "ratio": float(max(ratios[:size])), "family_size": int(size)})
    return pd.DataFrame(rows)


def probe_stability(table: pd.DataFrame) -> Dict[float, float]:
    """Relative change of the max ratio between the smallest and largest family, per p."""
    out = {}
    for p, grp in table.groupby("p"):
        grp = grp.sort_values("family_size")
        first, last = grp["ratio"].iloc[0], grp["ratio"].iloc[-1]
        out[float(p)] = float(abs(last - first) / first) if first else 0.0
    return out
