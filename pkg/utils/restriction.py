"""
Fourier restriction numerics: surface-measure transforms, dyadic pieces of
the sphere kernel, the Knapp cap and the 1D Strichartz ratio.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import fft as sfft
from scipy.integrate import trapezoid
from scipy.special import j0

from utils.config import default_threads
from utils.errors import GridError, HorizonError
from utils.freefield import WavePacket, free_propagate_line
from utils.logging_config import get_logger
from utils.numerics import PowerLawFit, fit_power_law, line_grid

logger = get_logger(__name__)

STRICHARTZ_TAIL = 1e-2
SMOOTHING = 0.2


def smooth_step(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 1 for t <= 0, 0 for t >= 1."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(t < 1.0, np.exp(-1.0 / np.maximum(1.0 - t, 1e-300)), 0.0)
        b = np.where(t > 0.0, np.exp(-1.0 / np.maximum(t, 1e-300)), 0.0)
    return a / (a + b)


# -----------------------------
# Surface measures
# -----------------------------
@dataclass(eq=False)
class SurfaceMeasure:
    """
    Quadrature for a measure on S^1 or S^2.

    ``weights`` include any density (the smoothed cap profile for caps), so
    sum(weights) is the total mass.
    """

    kind: str
    dimension: int
    nodes: np.ndarray
    weights: np.ndarray
    spacing: float
    delta: Optional[float] = None

    @property
    def mass(self) -> float:
        return float(self.weights.sum())


def _sphere_s2(n: int, theta_max: float = np.pi) -> Tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    mu, wmu = np.polynomial.legendre.leggauss(n)
    c_lo = np.cos(theta_max)
    cos_t = 0.5 * (1.0 - c_lo) * mu + 0.5 * (1.0 + c_lo)
    wcos = 0.5 * (1.0 - c_lo) * wmu
    n_phi = 2 * n
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    sin_t = np.sqrt(1.0 - cos_t**2)
    nodes = np.stack(
        [np.outer(sin_t, np.cos(phi)).ravel(), np.outer(sin_t, np.sin(phi)).ravel(), np.repeat(cos_t, n_phi)],
        axis=1,
    )
    weights = np.repeat(wcos, n_phi) * (2.0 * np.pi / n_phi)
    theta = np.arccos(np.clip(cos_t, -1.0, 1.0))
    gaps = np.abs(np.diff(np.concatenate([[0.0], np.sort(theta), [theta_max]])))
    spacing = max(float(gaps.max()), 2.0 * np.pi / n_phi)
    return nodes, weights, cos_t, spacing


def sphere_measure(d: int = 3, n: int = 64) -> SurfaceMeasure:
    """
    Surface measure on S^{d-1}: Gauss-Legendre in cos(theta) times a uniform
    azimuth for S^2, a uniform rule for S^1.
    """
    if d == 2:
        return circle_measure(n)
    if d != 3:
        raise ValueError(f"sphere_measure supports d in (2, 3), got {d}")
    nodes, weights, _, spacing = _sphere_s2(n)
    return SurfaceMeasure("sphere", 3, nodes, weights, spacing)


def circle_measure(n: int = 256) -> SurfaceMeasure:
    phi = 2.0 * np.pi * np.arange(n) / n
    nodes = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    return SurfaceMeasure("sphere", 2, nodes, np.full(n, 2.0 * np.pi / n), 2.0 * np.pi / n)


def cap_profile(theta: np.ndarray, delta: float) -> np.ndarray:
    """Smoothed indicator of the cap of diameter delta; the edge is smoothed over 0.2 delta."""
    edge = 0.5 * delta - 0.5 * SMOOTHING * delta
    return smooth_step((np.asarray(theta) - edge) / (SMOOTHING * delta))


def _cap_theta_rule(delta: float, order: int = 32) -> Tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    edge = 0.5 * delta - 0.5 * SMOOTHING * delta
    outer = edge + SMOOTHING * delta
    thetas, weights = [], []
    for a, b in ((0.0, edge), (edge, outer)):
        thetas.append(0.5 * (b - a) * x + 0.5 * (a + b))
        weights.append(0.5 * (b - a) * w)
    return np.concatenate(thetas), np.concatenate(weights)


def cap_measure(delta: float, n: int = 32) -> SurfaceMeasure:
    """Smoothed cap indicator around the north pole of S^2 as a weighted measure."""
    if not 0.0 < delta <= 0.5:
        raise ValueError(f"cap diameter must lie in (0, 1/2], got {delta}")
    theta, wt = _cap_theta_rule(delta, n)
    n_phi = 2 * n
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    nodes = np.stack(
        [
            np.outer(np.sin(theta), np.cos(phi)).ravel(),
            np.outer(np.sin(theta), np.sin(phi)).ravel(),
            np.repeat(np.cos(theta), n_phi),
        ],
        axis=1,
    )
    dens = cap_profile(theta, delta) * np.sin(theta) * wt
    weights = np.repeat(dens, n_phi) * (2.0 * np.pi / n_phi)
    spacing = max(float(np.diff(theta).max()), 2.0 * np.pi / n_phi * float(theta.max()))
    return SurfaceMeasure("cap", 3, nodes, weights, spacing, delta)


def sigma_hat_sphere(d: np.ndarray, radius: float = 1.0) -> np.ndarray:
    """Closed form of the surface-measure transform of the radius-R sphere in R^3: 4 pi R sin(R d) / d."""
    d = np.asarray(d, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = 4.0 * np.pi * radius * np.sin(radius * d) / d
    return np.where(d == 0.0, 4.0 * np.pi * radius**2, out)


def _as_vectors(xi_list, dimension: int) -> np.ndarray:
    xi = np.asarray(xi_list, dtype=float)
    if xi.ndim <= 1:
        vecs = np.zeros((xi.size, dimension))
        vecs[:, -1] = xi.ravel()
        return vecs
    if xi.shape[1] != dimension:
        raise ValueError(f"frequency vectors must have {dimension} components, got {xi.shape[1]}")
    return xi


def sigma_hat(surface: SurfaceMeasure, xi_list, chunk: int = 8) -> np.ndarray:
    """
    sum_nodes w exp(-i x . xi). Scalars in ``xi_list`` are taken along the last axis.

    Raises:
        GridError: node spacing above pi / (4 max |xi|)
    """
    xi = _as_vectors(xi_list, surface.dimension)
    xi_max = float(np.linalg.norm(xi, axis=1).max(initial=0.0))
    if xi_max > 0 and surface.spacing > np.pi / (4.0 * xi_max) + 1e-15:
        raise GridError(f"surface spacing {surface.spacing:.3g} undersamples |xi| up to {xi_max:g}")
    out = np.empty(xi.shape[0], dtype=complex)
    for lo in range(0, xi.shape[0], chunk):
        block = xi[lo : lo + chunk]
        out[lo : lo + chunk] = np.exp(-1j * block @ surface.nodes.T) @ surface.weights
    return out


def sphere_for_frequency(d: int, xi_max: float) -> SurfaceMeasure:
    """Smallest standard rule whose spacing resolves |xi| <= xi_max."""
    n = max(16, int(np.ceil(4.0 * xi_max)))
    if d == 2:
        n *= 2
    s = sphere_measure(d, n)
    while s.spacing > np.pi / (4.0 * xi_max):
        n += 8
        s = sphere_measure(d, n)
    return s


def _envelope(xi: np.ndarray, values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    a = np.abs(values)
    peaks = np.flatnonzero((a[1:-1] >= a[:-2]) & (a[1:-1] >= a[2:])) + 1
    return xi[peaks], a[peaks]


def sigma_hat_decay(d: int = 3, xi_range: Tuple[float, float] = (5.0, 100.0), step: float = 0.1) -> PowerLawFit:
    """Power-law fit of the local maxima of |sigma_hat| along a ray."""
    lo, hi = xi_range
    xi = np.arange(lo, hi + step, step)
    surface = sphere_for_frequency(d, float(xi.max()))
    vals = sigma_hat(surface, xi)
    px, pv = _envelope(xi, vals)
    fit = fit_power_law(px, pv, (lo, hi))
    logger.info("sigma_hat decay in d=%d: exponent %.4f over %d peaks", d, fit.exponent, fit.samples)
    return fit


# -----------------------------
# Dyadic pieces
# -----------------------------
@dataclass
class DyadicPiece:
    j: int
    r_range: Tuple[float, float]
    norm_1_inf: float
    norm_2_2: float


@dataclass
class TomasReport:
    pieces: List[DyadicPiece]
    slope_1_inf: float
    slope_2_2: float
    critical_p: float

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [{"j": p.j, "r_lo": p.r_range[0], "r_hi": p.r_range[1], "norm_1_inf": p.norm_1_inf, "norm_2_2": p.norm_2_2} for p in self.pieces]
        )


def dyadic_cutoff(r: np.ndarray, j: int) -> np.ndarray:
    """chi_j with sum_j chi_j = 1; chi_0 covers r <= 2, chi_j lives on [2^(j-1), 2^(j+1)]."""
    phi = lambda x: smooth_step(np.asarray(x) - 1.0)  # noqa: E731
    r = np.asarray(r, dtype=float)
    if j == 0:
        return phi(r)
    return phi(r / 2.0**j) - phi(r / 2.0 ** (j - 1))


def _dyadic_piece(j: int) -> DyadicPiece:
    lo, hi = (0.0, 2.0) if j == 0 else (2.0 ** (j - 1), 2.0 ** (j + 1))
    x, w = np.polynomial.legendre.leggauss(16)
    edges = np.linspace(lo, hi, int(np.ceil(hi - lo)) * 2 + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    r = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wr = (half[:, None] * w[None, :]).ravel()
    chi = dyadic_cutoff(r, j)
    kernel = sigma_hat_sphere(r) * chi
    norm_1_inf = float(np.abs(kernel).max())

    dxi = min(0.01, 2.0**-j / 16.0)
    xi = np.arange(dxi, 2.5, dxi)
    # radial 3D transform of chi_j(r) 4 pi sin(r) / r
    symbol = 16.0 * np.pi**2 / xi * (np.sin(np.outer(xi, r)) @ (chi * np.sin(r) * wr))
    sym0 = 16.0 * np.pi**2 * float(np.sum(chi * np.sin(r) * r * wr))
    norm_2_2 = float(max(np.abs(symbol).max(), abs(sym0)))
    return DyadicPiece(j, (lo, hi), norm_1_inf, norm_2_2)


def critical_index(slope_1_inf: float, slope_2_2: float) -> float:
    """p with theta s_22 + (1 - theta) s_1inf = 0 and 1/p = theta/2 + 1 - theta."""
    theta = -slope_1_inf / (slope_2_2 - slope_1_inf)
    return 1.0 / (0.5 * theta + 1.0 - theta)


def tomas_dyadic_norms(j_list: Sequence[int] = (1, 2, 3, 4, 5, 6), d: int = 3) -> TomasReport:
    """
    Norms of the dyadic pieces T_j of convolution with the inverse transform of sigma_{S^2}.

    The 1 -> inf norm is the kernel sup and the 2 -> 2 norm the symbol sup; slopes are in log2 per j.
    """
    if d != 3:
        raise ValueError("tomas_dyadic_norms is implemented for d = 3")
    with ThreadPoolExecutor(max_workers=default_threads()) as pool:
        pieces = list(pool.map(_dyadic_piece, j_list))
    js = np.array([p.j for p in pieces], dtype=float)
    s1 = float(np.polyfit(js, np.log2([p.norm_1_inf for p in pieces]), 1)[0])
    s2 = float(np.polyfit(js, np.log2([p.norm_2_2 for p in pieces]), 1)[0])
    report = TomasReport(pieces, s1, s2, critical_index(s1, s2))
    logger.info("dyadic slopes 1->inf %.3f, 2->2 %.3f, critical p %.4f", s1, s2, report.critical_p)
    return report


def circulant_norms(kernel: np.ndarray, h: float) -> Tuple[Tuple[float, float], Tuple[float, float]]:
    """
    1 -> inf and 2 -> 2 norms of periodic convolution with ``kernel`` on a
    uniform grid: (from kernel and symbol sups, from the dense matrix).
    """
    k = np.asarray(kernel, dtype=complex)
    n = k.size
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    M = h * k[idx]
    exact = (h * float(np.abs(k).max()), h * float(np.abs(sfft.fft(k)).max()))
    brute = (float(np.abs(M).max()), float(np.linalg.svd(M, compute_uv=False)[0]))
    return exact, brute


# -----------------------------
# Knapp
# -----------------------------
@dataclass
class KnappCase:
    delta: float
    ratio: float
    peak: float
    long_axis: float
    transverse: float
    long_axis_quarter: float
    transverse_quarter: float


@dataclass
class KnappReport:
    cases: List[KnappCase]
    p_dual: float
    long_axis_exponent: float
    transverse_exponent: float
    height_exponent: float
    quarter_exponents: Tuple[float, float]

    @property
    def ratio_variation(self) -> float:
        r = [c.ratio for c in self.cases]
        return max(r) / min(r)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([c.__dict__ for c in self.cases])


def cap_extension(delta: float, rho: np.ndarray, z: np.ndarray, order: int = 64) -> np.ndarray:
    """
    Transform of the smoothed cap measure at points (rho, z) in cylinder
    coordinates about the cap axis, reduced to the polar angle through J0.
    """
    theta, wt = _cap_theta_rule(delta, order)
    dens = cap_profile(theta, delta) * np.sin(theta) * wt * 2.0 * np.pi
    rho = np.asarray(rho, dtype=float)
    z = np.asarray(z, dtype=float)
    bessel = j0(np.multiply.outer(rho, np.sin(theta)))
    phase = np.exp(-1j * np.multiply.outer(z, np.cos(theta)))
    return (bessel * dens[None, :]) @ phase.T


def _extent(mask: np.ndarray, coords: np.ndarray, axis: int) -> float:
    hit = mask.any(axis=axis)
    return float(np.abs(coords[hit]).max()) if hit.any() else 0.0


def _cap_box(delta: float, rho_span: float, z_span: float, n_rho: int, n_z: int, max_doublings: int):
    """
    Sample |(f sigma)^| on a (rho, z) box, doubling the box until the edge
    is below 5% of the peak. The stationary-phase cone along the cap normals
    decays only like 1/|xi|, so the edge level falls as 1/span.
    """
    R = 1.0 / delta
    for attempt in range(max_doublings + 1):
        rho = np.linspace(0.0, rho_span * R, n_rho)
        z = np.linspace(-z_span * R**2, z_span * R**2, n_z)
        F = np.abs(cap_extension(delta, rho, z, order=64 * 2**attempt))
        peak = float(F.max())
        edge = max(F[-1, :].max(), F[:, 0].max(), F[:, -1].max())
        if edge <= 5e-2 * peak:
            return rho, z, F, peak
        logger.debug("cap box for delta=%g: edge %.2e of peak, doubling", delta, edge / peak)
        rho_span, z_span = 2.0 * rho_span, 2.0 * z_span
        n_rho, n_z = 2 * n_rho - 1, 2 * n_z - 1
    raise GridError(f"cap transform for delta={delta:g} reaches the box edge ({edge / peak:.2e} of peak)")


def _knapp_case(delta: float, p_dual: float, rho_span: float, z_span: float, n_rho: int, n_z: int, max_doublings: int = 2) -> KnappCase:
    rho, z, F, peak = _cap_box(delta, rho_span, z_span, n_rho, n_z, max_doublings)
    lp = (2.0 * np.pi * trapezoid(trapezoid(F**p_dual, z, axis=1) * rho, rho)) ** (1.0 / p_dual)
    theta, wt = _cap_theta_rule(delta)
    l2 = np.sqrt(2.0 * np.pi * np.sum(cap_profile(theta, delta) ** 2 * np.sin(theta) * wt))
    half, quarter = F >= 0.5 * peak, F >= 0.25 * peak
    return KnappCase(
        delta=delta,
        ratio=float(lp / l2),
        peak=peak,
        long_axis=_extent(half, z, 0),
        transverse=_extent(half, rho, 1),
        long_axis_quarter=_extent(quarter, z, 0),
        transverse_quarter=_extent(quarter, rho, 1),
    )


def knapp_ratio(
    delta_list: Sequence[float] = (1 / 4, 1 / 8, 1 / 16, 1 / 32),
    d: int = 3,
    rho_span: float = 96.0,
    z_span: float = 300.0,
    n_rho: int = 769,
    n_z: int = 801,
    max_doublings: int = 2,
) -> KnappReport:
    """
    ||(f sigma)^||_{p'} / ||f||_{L^2(S^2)} for smoothed caps of diameter delta,
    with p' the dual of (2d+2)/(d+3), and the scaling of the half-max level set.

    Raises:
        GridError: the transform does not decay inside the (rho, z) box, even
            after max_doublings enlargements
    """
    if d != 3:
        raise ValueError("knapp_ratio is implemented for d = 3")
    for delta in delta_list:
        if not 0.0 < delta <= 0.5:
            raise ValueError(f"cap diameter must lie in (0, 1/2], got {delta}")
    p = (2.0 * d + 2.0) / (d + 3.0)
    p_dual = p / (p - 1.0)
    with ThreadPoolExecutor(max_workers=default_threads()) as pool:
        cases = list(pool.map(lambda dl: _knapp_case(dl, p_dual, rho_span, z_span, n_rho, n_z, max_doublings), delta_list))
    logR = np.log([1.0 / c.delta for c in cases])
    slope = lambda vals: float(np.polyfit(logR, np.log(vals), 1)[0])  # noqa: E731
    return KnappReport(
        cases=cases,
        p_dual=p_dual,
        long_axis_exponent=slope([c.long_axis for c in cases]),
        transverse_exponent=slope([c.transverse for c in cases]),
        height_exponent=slope([c.peak for c in cases]),
        quarter_exponents=(slope([c.long_axis_quarter for c in cases]), slope([c.transverse_quarter for c in cases])),
    )


# -----------------------------
# Strichartz (d = 1)
# -----------------------------
@dataclass(frozen=True)
class LinePacket:
    """Sum of Gaussians a exp(-(x - c)^2 / (2 w^2) + i k x); components are (a, w, c, k)."""

    components: Tuple[Tuple[float, float, float, float], ...]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x, dtype=complex)
        for a, w, c, k in self.components:
            out += a * np.exp(-((x - c) ** 2) / (2.0 * w**2) + 1j * k * x)
        return out

    @property
    def is_zero(self) -> bool:
        return all(a == 0 for a, *_ in self.components)

    @property
    def widths(self) -> Tuple[float, float]:
        ws = [w for _, w, _, _ in self.components]
        return min(ws), max(ws)

    @property
    def center(self) -> float:
        return float(np.mean([c for _, _, c, _ in self.components]))

    def dilated(self, lam: float) -> "LinePacket":
        """lam^(1/2) f(lam x)."""
        return LinePacket(tuple((a * lam**0.5, w / lam, c / lam, k * lam) for a, w, c, k in self.components))

    def translated(self, x0: float) -> "LinePacket":
        return LinePacket(tuple((a * np.exp(-1j * k * x0), w, c + x0, k) for a, w, c, k in self.components))

    def modulated(self, kappa: float) -> "LinePacket":
        return LinePacket(tuple((a, w, c, k + kappa) for a, w, c, k in self.components))


def strichartz_family(count: int = 20, seed: int = 0, widths: Tuple[float, float] = (0.7, 1.4)) -> List[LinePacket]:
    """Seeded packets of one or two Gaussians with random widths, centres and modulations."""
    rng = np.random.default_rng(seed)
    family = []
    for _ in range(count):
        comps = []
        for _ in range(int(rng.integers(1, 3))):
            comps.append((float(rng.uniform(0.5, 1.0)), float(rng.uniform(*widths)), float(rng.uniform(-2.0, 2.0)), float(rng.uniform(-1.0, 1.0))))
        family.append(LinePacket(tuple(comps)))
    return family


@dataclass
class StrichartzReport:
    max_ratio: float
    ratios: List[float]
    running_max: pd.DataFrame
    tail_fractions: List[float] = field(default_factory=list)

    def stability(self) -> float:
        """Relative change of the running maximum over the second half of the family."""
        rm = self.running_max["max_ratio"].to_numpy()
        if rm.size < 2:
            return 0.0
        half = rm[rm.size // 2 - 1]
        return float(abs(rm[-1] - half) / max(half, 1e-300))


def _strichartz_box(f: LinePacket, q: float, theta_nodes: int, T: float) -> Tuple[float, float, float]:
    """(integral over |t| <= T, t^-2 tail estimate beyond T, ||f||_2) on a box sized for T."""
    s_min, s_max = f.widths
    k_max = max(abs(k) for *_, k in f.components)
    spread = max(abs(c - f.center) for _, _, c, _ in f.components)
    width_T = 2.0 * T / s_min + s_max
    half_width = 4.0 * width_T + 2.0 * k_max * T + spread
    h = min(s_min / 6.0, np.pi / (k_max + 8.0 / s_min))
    n = int(sfft.next_fast_len(int(np.ceil(2.0 * half_width / h))))
    grid = line_grid(half_width, n)
    x = grid.nodes + f.center
    psi0 = WavePacket(grid, f(x), "1d")
    l2 = float(np.sqrt(np.sum(np.abs(psi0.values) ** 2) * grid.h))

    theta_max = np.arctan(2.0 * T / s_max**2)
    u, wu = np.polynomial.legendre.leggauss(theta_nodes)
    theta = theta_max * u
    t = 0.5 * s_max**2 * np.tan(theta)
    jac = 0.5 * s_max**2 / np.cos(theta) ** 2 * theta_max * wu
    mass = np.empty(t.size)
    for i, ti in enumerate(t):
        mass[i] = np.sum(np.abs(free_propagate_line(psi0, ti).values) ** q) * grid.h
    total = float(np.sum(mass * jac))
    ends = []
    for tt in (-T, T):
        out = free_propagate_line(psi0, tt)
        if out.boundary_mass > STRICHARTZ_TAIL:
            raise HorizonError(out.boundary_mass, f"packet reaches the box edge at t={tt:g}")
        ends.append(np.sum(np.abs(out.values) ** q) * grid.h * T)
    return total, float(sum(ends)), l2


def strichartz_single(
    f: LinePacket, q: float = 6.0, theta_nodes: int = 96, horizon: float = 100.0, max_doublings: int = 3
) -> Tuple[float, float]:
    """
    ||exp(-it Delta) f||_{L^q_{t,x}} / ||f||_2 for one packet on an adapted box.

    Time runs over t = (s^2 / 2) tan(theta) with s the largest width, cut at
    |t| = T, starting from T = horizon s^2. The cut tail is added from the
    t^-2 law of the L^q_x mass; T doubles until the tail is at most 1% of
    the total.

    Returns:
        (ratio, tail fraction)

    Raises:
        HorizonError: boundary mass above 1%, or the tail still above 1%
            after max_doublings doublings of T
    """
    if f.is_zero:
        return 0.0, 0.0
    T = horizon * f.widths[1] ** 2
    for attempt in range(max_doublings + 1):
        total, tail, l2 = _strichartz_box(f, q, theta_nodes, T)
        frac = tail / (total + tail)
        if frac <= STRICHARTZ_TAIL:
            return float((total + tail) ** (1.0 / q) / l2), frac
        logger.debug("Strichartz tail %.2e at T=%g, doubling", frac, T)
        T *= 2.0
    raise HorizonError(frac, f"time box misses {frac:.2%} of the space-time norm")


def strichartz_ratio(f_family: Sequence[LinePacket], d: int = 1, workers: Optional[int] = None) -> StrichartzReport:
    """Max over the family of the L^6_{t,x} Strichartz ratio in d = 1, with the running maximum."""
    if d != 1:
        raise ValueError("strichartz_ratio is implemented for d = 1")
    q = 2.0 + 4.0 / d
    with ThreadPoolExecutor(max_workers=workers or default_threads()) as pool:
        results = list(pool.map(lambda f: strichartz_single(f, q), f_family))
    ratios = [r for r, _ in results]
    running = np.maximum.accumulate(ratios) if ratios else np.zeros(0)
    frame = pd.DataFrame({"family_size": np.arange(1, len(ratios) + 1), "ratio": ratios, "max_ratio": running})
    best = float(running[-1]) if ratios else 0.0
    logger.info("Strichartz ratio over %d packets: max %.6f", len(ratios), best)
    return StrichartzReport(best, ratios, frame, [fr for _, fr in results])


def gaussian_strichartz_ratio() -> float:
    """Closed form for a single Gaussian in d = 1: (2 sqrt 3)^(-1/6)."""
    return float((2.0 * np.sqrt(3.0)) ** (-1.0 / 6.0))
