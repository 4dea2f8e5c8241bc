"""
Free propagator and free resolvent in the 3D radial (u = r psi) and 1D settings.

Radial functions are stored as psi samples at RadialGrid nodes; operators act
on u = r psi with Dirichlet conditions at r = 0 and r = r_max.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import fft as sfft

from utils.errors import GridError
from utils.logging_config import get_logger
from utils.numerics import (
    LineGrid,
    PowerLawFit,
    RadialGrid,
    boundary_mass_fraction,
    dst,
    fit_power_law,
    idst,
    line_lp_norm,
    radial_grid,
    radial_lp_norm,
)

logger = get_logger(__name__)

Grid = Union[RadialGrid, LineGrid]
REFLECTION_THRESHOLD = 1e-6
KRS_MIN_SAMPLES = 8


# -----------------------------
# Wave packets
# -----------------------------
@dataclass(eq=False)
class WavePacket:
    """
    Complex samples of a radial (3D) or line (1D) wave function.

    Norms are cached at construction; ``warnings`` collects soft diagnostics
    such as boundary reflection.
    """

    grid: Grid
    values: np.ndarray
    dimension: str = "3d"
    warnings: List[str] = field(default_factory=list)
    boundary_mass: float = 0.0
    l1: float = field(init=False)
    l2: float = field(init=False)
    linf: float = field(init=False)

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=complex)
        if self.dimension == "3d":
            norm = lambda p: radial_lp_norm(self.grid, self.values, p)
        else:
            norm = lambda p: line_lp_norm(self.grid, self.values, p)
        self.l1 = norm(1.0)
        self.l2 = norm(2.0)
        self.linf = norm(np.inf)

    @property
    def reflected(self) -> bool:
        return self.boundary_mass > REFLECTION_THRESHOLD

    def with_values(self, values: np.ndarray) -> "WavePacket":
        return WavePacket(self.grid, values, self.dimension)

    def inner(self, other: "WavePacket") -> complex:
        if self.dimension == "3d":
            g = self.grid
            return complex(4.0 * np.pi * np.sum(np.conj(self.values) * other.values * g.nodes**2 * g.weights))
        return complex(np.sum(np.conj(self.values) * other.values) * self.grid.h)


def radial_packet(grid: RadialGrid, profile: Callable[[np.ndarray], np.ndarray]) -> WavePacket:
    return WavePacket(grid, profile(grid.nodes), "3d")


def gaussian_packet(grid: Grid, width: float = 1.0, center: float = 0.0, k0: float = 0.0, amplitude: float = 1.0) -> WavePacket:
    """exp(-((x - center)/width)^2 / 2) exp(i k0 x) on either grid type."""
    x = grid.nodes
    vals = amplitude * np.exp(-0.5 * ((x - center) / width) ** 2) * np.exp(1j * k0 * x)
    return WavePacket(grid, vals, "3d" if isinstance(grid, RadialGrid) else "1d")


def random_radial_packets(grid: RadialGrid, count: int, seed: int = 0, widths: Tuple[float, float] = (0.7, 2.0)) -> List[WavePacket]:
    """Seeded radial packets: Gaussian envelopes with random width, amplitude and radial modulation."""
    rng = np.random.default_rng(seed)
    out = []
    r = grid.nodes
    for _ in range(count):
        w = rng.uniform(*widths)
        k = rng.uniform(0.0, 1.5)
        amp = rng.uniform(0.5, 2.0) * np.exp(1j * rng.uniform(0.0, 2.0 * np.pi))
        out.append(WavePacket(grid, amp * np.exp(-0.5 * (r / w) ** 2) * np.cos(k * r), "3d"))
    return out


def outer_mass_fraction(packet: WavePacket, fraction: float = 0.9) -> float:
    if packet.dimension == "3d":
        return boundary_mass_fraction(packet.grid, packet.grid.nodes * packet.values, fraction)
    x = packet.grid.nodes
    dens = np.abs(packet.values) ** 2
    total = dens.sum()
    return float(dens[np.abs(x) > fraction * packet.grid.half_width].sum() / total) if total else 0.0


# -----------------------------
# Free propagation
# -----------------------------
def free_phase(grid: RadialGrid, t: float) -> np.ndarray:
    """Diagonal of exp(-i t H0) on the sine coefficients."""
    return np.exp(-1j * grid.wavenumbers**2 * t)


def free_propagate(f: WavePacket, t: float) -> WavePacket:
    """
    exp(-i t H0) f with H0 = -Laplacian.

    3D radial data go through the Dirichlet sine transform of u = r psi; 1D
    data through the full-line FFT. Boundary mass above 1e-6 in the outer
    tenth of the domain is flagged in the result.
    """
    if t == 0:
        out = f.with_values(f.values.copy())
        out.boundary_mass = f.boundary_mass
        return out
    if f.dimension == "1d":
        return free_propagate_line(f, t)
    g = f.grid
    u = g.nodes * f.values
    u_t = idst(dst(u, g.h) * free_phase(g, t), g.h)
    out = WavePacket(g, u_t / g.nodes, "3d")
    _flag_reflection(out, t)
    return out


def free_propagate_line(f: WavePacket, t: float) -> WavePacket:
    """1D free flow by FFT: multiply the transform by exp(-i xi^2 t)."""
    g = f.grid
    psi_hat = sfft.fft(f.values)
    out = WavePacket(g, sfft.ifft(psi_hat * np.exp(-1j * g.frequencies**2 * t)), "1d")
    _flag_reflection(out, t)
    return out


def _flag_reflection(out: WavePacket, t: float) -> None:
    out.boundary_mass = outer_mass_fraction(out)
    if out.reflected:
        msg = f"boundary reflection mass {out.boundary_mass:.3e} at t={t:g}"
        logger.warning(msg)
        out.warnings.append(msg)


def gaussian_line_evolution(x: np.ndarray, t: float) -> np.ndarray:
    """Exact free evolution of exp(-x^2): (1 + 4 i t)^(-1/2) exp(-x^2 / (1 + 4 i t))."""
    a = 1.0 + 4j * t
    return np.exp(-(x**2) / a) / np.sqrt(a)


def sup_norm_decay(
    f: WavePacket,
    times: Sequence[float],
    window: Tuple[float, float] = (5.0, 50.0),
) -> Tuple[np.ndarray, PowerLawFit, bool]:
    """Sample ||exp(-i t H0) f||_inf and fit its power law over the window."""
    sup = np.empty(len(times))
    reflected = False
    for i, t in enumerate(times):
        ft = free_propagate(f, t)
        sup[i] = ft.linf
        reflected = reflected or ft.reflected
    return sup, fit_power_law(times, sup, window), reflected


# -----------------------------
# Free resolvent
# -----------------------------
def resolvent_wavenumber(lam: float, sign: str = "+", eps: float = 0.0) -> complex:
    """k = sqrt(lambda^2 +- i eps) on the branch with Im k >= 0; the "-" branch has Re k <= 0."""
    if lam < 0 or eps < 0:
        raise ValueError(f"lambda and eps must be nonnegative, got {lam}, {eps}")
    if sign not in ("+", "-"):
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")
    k = np.sqrt(complex(lam**2, eps))
    return k if sign == "+" else -np.conj(k)


def radial_green(r: np.ndarray, s: np.ndarray, k: complex) -> np.ndarray:
    """
    G(r, s) = sin(k r_<) exp(i k r_>) / k, the s-wave reduction of
    exp(i k |x - y|) / (4 pi |x - y|): (R0 f)(r) = r^-1 int G(r, s) s f(s) ds.
    """
    rr, ss = np.meshgrid(r, s, indexing="ij")
    lo = np.minimum(rr, ss)
    hi = np.maximum(rr, ss)
    if k == 0:
        return lo.astype(complex)
    return np.sin(k * lo) * np.exp(1j * k * hi) / k


@dataclass(eq=False)
class EnergyKernel:
    """
    Dense free resolvent R0(lambda^2 +- i eps) on a RadialGrid.

    ``entries`` acts on psi samples with the quadrature weights folded in;
    ``green`` is the symmetric s-wave kernel G(r_i, r_j).
    """

    grid: RadialGrid
    lam: float
    sign: str
    eps: float
    green: np.ndarray
    entries: np.ndarray

    def apply(self, psi: np.ndarray) -> np.ndarray:
        return self.entries @ psi


def free_resolvent_kernel(lam: float, sign: str = "+", eps: float = 0.0, grid: Optional[RadialGrid] = None) -> EnergyKernel:
    """
    Assemble the radial free resolvent kernel at spectral parameter lambda^2 +- i eps.

    At lambda = 0, eps = 0 this is the Newton kernel min(r, s) in the u-representation.
    """
    grid = grid or radial_grid(60.0, 1024)
    k = resolvent_wavenumber(lam, sign, eps)
    r = grid.nodes
    G = radial_green(r, r, k)
    entries = G * (r * grid.weights)[None, :] / r[:, None]
    logger.debug("assembled free resolvent lam=%g sign=%s eps=%g n=%d", lam, sign, eps, grid.n)
    return EnergyKernel(grid=grid, lam=float(lam), sign=sign, eps=float(eps), green=G, entries=entries)


def free_kernel_point(d: float, lam: float, sign: str = "+") -> complex:
    """Point value exp(+- i lambda d) / (4 pi d) of the 3D free resolvent."""
    if d <= 0:
        raise ValueError(f"distance must be positive, got {d}")
    s = 1.0 if sign == "+" else -1.0
    return complex(np.exp(1j * s * lam * d) / (4.0 * np.pi * d))


def apply_free_resolvent(grid: RadialGrid, psi: np.ndarray, lam: float, sign: str = "+", eps: float = 0.0) -> np.ndarray:
    """
    O(n) application of R0(lambda^2 +- i eps) to radial samples via cumulative sums.
    """
    k = resolvent_wavenumber(lam, sign, eps)
    r = grid.nodes
    uw = r * np.asarray(psi) * grid.weights
    if k == 0:
        inner = np.cumsum(r * uw)
        outer = np.cumsum(uw[::-1])[::-1] - uw
        return (inner + r * outer) / r
    inner = np.cumsum(np.sin(k * r) * uw)
    tail = np.exp(1j * k * r) * uw
    outer = np.cumsum(tail[::-1])[::-1] - tail
    return (np.exp(1j * k * r) * inner + np.sin(k * r) * outer) / (k * r)


def resolvent_identity_residual(f: WavePacket, lam: float, sign: str = "+", eps: float = 0.0, support: Optional[float] = None) -> float:
    """
    Relative sup residual of R0(z)(-Laplacian - z) f = f for band-limited radial f.
    """
    g = f.grid
    k = resolvent_wavenumber(lam, sign, eps)
    u = g.nodes * f.values
    lap_u = idst(dst(u, g.h) * g.wavenumbers**2, g.h)
    h_f = lap_u / g.nodes - k**2 * f.values
    back = apply_free_resolvent(g, h_f, lam, sign, eps)
    mask = g.nodes <= (support if support is not None else 0.5 * g.r_max)
    scale = np.abs(f.values[mask]).max()
    return float(np.abs(back[mask] - f.values[mask]).max() / scale)


# -----------------------------
# Imaginary part of the resolvent
# -----------------------------
@dataclass
class IdentityCheck:
    residual: float
    c: complex
    lhs: np.ndarray
    rhs: np.ndarray


def imaginary_part_identity_check(
    lam: float,
    f: WavePacket,
    c: Optional[complex] = None,
    r_obs: float = 20.0,
    n_mu: int = 128,
) -> IdentityCheck:
    """
    Compare [R0(lambda^2 + i0) - R0(lambda^2 - i0)] f with c lambda^-1 (sigma_hat_{lambda S^2} * f).

    The right side convolves f with the sphere-measure transform from the
    restriction module by Gauss-Legendre quadrature over the relative angle.
    When ``c`` is None it is fitted by least squares and returned.

    Returns:
        IdentityCheck with the relative L2 residual on r <= r_obs
    """
    from utils.restriction import sigma_hat_sphere

    g = f.grid
    if lam < np.pi / g.r_max or lam > np.pi / g.h:
        raise GridError(f"lambda={lam:g} outside the resolved band [{np.pi / g.r_max:.3g}, {np.pi / g.h:.3g}]")
    mask = g.nodes <= r_obs
    r = g.nodes[mask]
    lhs = (apply_free_resolvent(g, f.values, lam, "+") - apply_free_resolvent(g, f.values, lam, "-"))[mask]

    support = np.abs(f.values) > 1e-14 * max(np.abs(f.values).max(initial=0.0), 1e-300)
    s = g.nodes[support]
    fs = f.values[support] * g.weights[support]
    mu, wmu = np.polynomial.legendre.leggauss(n_mu)
    rhs = np.zeros(r.size, dtype=complex)
    for i, ri in enumerate(r):
        d = np.sqrt(np.maximum(ri**2 + s[:, None] ** 2 - 2.0 * ri * s[:, None] * mu[None, :], 0.0))
        shell = 2.0 * np.pi * (sigma_hat_sphere(d, radius=lam) @ wmu)
        rhs[i] = np.sum(shell * s**2 * fs)
    rhs = rhs / lam

    norm_l = np.sqrt(np.sum(np.abs(lhs) ** 2 * r**2))
    norm_r = np.sqrt(np.sum(np.abs(rhs) ** 2 * r**2))
    if norm_l == 0 and norm_r == 0:
        return IdentityCheck(0.0, c if c is not None else 0j, lhs, rhs)
    if c is None:
        c = complex(np.sum(np.conj(rhs) * lhs * r**2) / np.sum(np.abs(rhs) ** 2 * r**2))
    resid = np.sqrt(np.sum(np.abs(lhs - c * rhs) ** 2 * r**2)) / max(norm_l, 1e-300)
    return IdentityCheck(float(resid), complex(c), lhs, rhs)


# -----------------------------
# KRS resolvent-decay probe
# -----------------------------
@dataclass
class KrsProbe:
    fit: PowerLawFit
    lams: np.ndarray
    ratios: np.ndarray
    p: float
    p_dual: float


def oscillating_bump_family(widths: Sequence[float] = (0.5, 1.0, 2.0), oscillations: Sequence[float] = (0.0, 0.5, 1.0)) -> List[Tuple[float, float]]:
    """Members (w, kappa): g(r) = exp(-(lambda r / w)^2) cos(kappa lambda r)."""
    return [(w, kap) for w in widths for kap in oscillations]


def krs_decay_probe(
    lam_list: Sequence[float],
    family: Optional[Sequence[Tuple[float, float]]] = None,
    p: float = 4.0 / 3.0,
    grid: Optional[RadialGrid] = None,
    ratio_fn: Optional[Callable[[float, Tuple[float, float]], float]] = None,
) -> KrsProbe:
    """
    Lower-bound probe of ||R0(lambda^2 + i0)||_{p -> p'} over a bump family.

    The default pair p = 4/3 -> 4 is the one for which the lambda^(-1/2)
    rate is scale-consistent in 3D.

    Args:
        lam_list: at least 8 positive frequencies spanning at least a decade
        family: (width, oscillation) members in units of 1/lambda
        p: Lebesgue exponent of the source space
        grid: radial grid; defaults to [0, 40] with 4096 nodes
        ratio_fn: replaces the resolvent ratio (used for synthetic checks)

    Returns:
        KrsProbe with the fitted decay exponent of the maximal ratio

    Raises:
        ValueError: empty family, fewer than 8 frequencies, or less than a decade
    """
    family = oscillating_bump_family() if family is None else list(family)
    if not family:
        raise ValueError("krs_decay_probe needs a nonempty test family")
    lams = np.asarray(lam_list, dtype=float)
    if lams.size < KRS_MIN_SAMPLES:
        raise ValueError(f"krs_decay_probe needs at least {KRS_MIN_SAMPLES} frequencies, got {lams.size}")
    if np.any(lams <= 0) or lams.max() < 10.0 * lams.min():
        raise ValueError(f"krs_decay_probe needs positive frequencies spanning a decade, got [{lams.min():g}, {lams.max():g}]")
    grid = grid or radial_grid(40.0, 4096)
    p_dual = p / (p - 1.0)
    ratios = np.empty(lams.size)
    for i, lam in enumerate(lams):
        best = 0.0
        for member in family:
            if ratio_fn is not None:
                val = ratio_fn(lam, member)
            else:
                w, kap = member
                gvals = np.exp(-((lam * grid.nodes / w) ** 2)) * np.cos(kap * lam * grid.nodes)
                out = apply_free_resolvent(grid, gvals, lam, "+")
                val = radial_lp_norm(grid, out, p_dual) / radial_lp_norm(grid, gvals, p)
            best = max(best, val)
        ratios[i] = best
    fit = fit_power_law(lams, ratios)
    logger.info("KRS probe p=%.3g exponent %.4f", p, fit.exponent)
    return KrsProbe(fit=fit, lams=lams, ratios=ratios, p=p, p_dual=p_dual)
