"""
Grids, quadrature, transforms and fits shared by every other module.

Fourier convention, used everywhere: f^(xi) = int f(x) exp(-i x.xi) dx, with
the inverse carrying (2 pi)^(-d).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import fft as sfft
from scipy.interpolate import CubicSpline

from utils.logging_config import get_logger

logger = get_logger(__name__)

Amplitude = Union[Callable[[np.ndarray], np.ndarray], Tuple[np.ndarray, np.ndarray]]

_GL_ORDER = 16
_GL_X, _GL_W = np.polynomial.legendre.leggauss(_GL_ORDER)


# -----------------------------
# Grids
# -----------------------------
@dataclass(frozen=True, eq=False)
class RadialGrid:
    """
    Discretization of [0, r_max] for 3D radial problems.

    ``rule == "midpoint"`` is the uniform cell-centred grid r_i = (i - 1/2) h,
    on which the orthonormal DST-II diagonalizes -d^2/dr^2 with Dirichlet
    conditions at both ends. ``rule == "gauss"`` is composite Gauss-Legendre
    and only supports quadrature.
    """

    r_max: float
    n: int
    nodes: np.ndarray
    weights: np.ndarray
    rule: str = "midpoint"

    @property
    def h(self) -> float:
        if self.rule != "midpoint":
            raise ValueError("spacing is only defined for the midpoint rule")
        return self.r_max / self.n

    @property
    def wavenumbers(self) -> np.ndarray:
        """Dirichlet wavenumbers k_m = m pi / r_max, m = 1..n."""
        return np.pi * np.arange(1, self.n + 1) / self.r_max

    def integrate(self, values: np.ndarray) -> complex:
        return np.sum(values * self.weights)

    def refined(self, factor: int = 2) -> "RadialGrid":
        return radial_grid(self.r_max, self.n * factor)


@dataclass(frozen=True, eq=False)
class LineGrid:
    """Periodic uniform grid on [-half_width, half_width)."""

    half_width: float
    n: int

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / self.n

    @property
    def nodes(self) -> np.ndarray:
        return -self.half_width + self.h * np.arange(self.n)

    @property
    def frequencies(self) -> np.ndarray:
        return 2.0 * np.pi * sfft.fftfreq(self.n, d=self.h)


def radial_grid(r_max: float = 60.0, n: int = 2048) -> RadialGrid:
    if r_max <= 0 or n < 2:
        raise ValueError(f"radial grid needs r_max > 0 and n >= 2, got r_max={r_max}, n={n}")
    h = r_max / n
    nodes = (np.arange(1, n + 1) - 0.5) * h
    return RadialGrid(r_max=float(r_max), n=int(n), nodes=nodes, weights=np.full(n, h))


def gauss_legendre_grid(r_max: float, panels: int, order: int = _GL_ORDER) -> RadialGrid:
    """Composite Gauss-Legendre rule on [0, r_max] with equal panels."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, r_max, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return RadialGrid(r_max=float(r_max), n=nodes.size, nodes=nodes, weights=weights, rule="gauss")


def line_grid(half_width: float, n: int) -> LineGrid:
    if half_width <= 0 or n < 2:
        raise ValueError(f"line grid needs half_width > 0 and n >= 2, got {half_width}, {n}")
    return LineGrid(half_width=float(half_width), n=int(n))


# -----------------------------
# Norms
# -----------------------------
def radial_lp_norm(grid: RadialGrid, psi: np.ndarray, p: float) -> float:
    """(4 pi int |psi|^p r^2 dr)^(1/p) for a radial function in 3D; p may be inf."""
    a = np.abs(psi)
    if np.isinf(p):
        return float(a.max(initial=0.0))
    return float((4.0 * np.pi * np.sum(a**p * grid.nodes**2 * grid.weights)) ** (1.0 / p))


def line_lp_norm(grid: LineGrid, psi: np.ndarray, p: float) -> float:
    a = np.abs(psi)
    if np.isinf(p):
        return float(a.max(initial=0.0))
    return float((np.sum(a**p) * grid.h) ** (1.0 / p))


# -----------------------------
# Sine transform
# -----------------------------
@dataclass
class SineTransform:
    coeffs: np.ndarray
    wavenumbers: np.ndarray
    boundary_mass: float
    warnings: List[str] = field(default_factory=list)


def boundary_mass_fraction(grid: RadialGrid, u: np.ndarray, fraction: float = 0.95) -> float:
    """Share of sum |u|^2 w carried by r > fraction * r_max."""
    dens = np.abs(u) ** 2 * grid.weights
    total = dens.sum()
    if total == 0:
        return 0.0
    return float(dens[grid.nodes > fraction * grid.r_max].sum() / total)


def dst(u: np.ndarray, h: float) -> np.ndarray:
    """Coefficients c with sum |c|^2 = h sum |u|^2 (rule-consistent Parseval)."""
    return np.sqrt(h) * sfft.dst(u, type=2, norm="ortho", axis=0)


def idst(c: np.ndarray, h: float) -> np.ndarray:
    return sfft.idst(c / np.sqrt(h), type=2, norm="ortho", axis=0)


def sine_transform(grid: RadialGrid, u: np.ndarray, threshold: float = 1e-8) -> SineTransform:
    """
    Dirichlet sine transform of u = r psi on a midpoint RadialGrid.

    Args:
        grid: midpoint radial grid
        u: samples at the grid nodes
        threshold: boundary mass fraction above which a warning is recorded

    Returns:
        SineTransform whose coefficients satisfy Parseval with the grid weights
    """
    if grid.rule != "midpoint":
        raise ValueError("sine_transform requires a midpoint RadialGrid")
    u = np.asarray(u)
    if u.shape[0] != grid.n:
        raise ValueError(f"expected {grid.n} samples, got {u.shape[0]}")
    mass = boundary_mass_fraction(grid, u)
    warnings: List[str] = []
    if mass > threshold:
        msg = f"boundary mass fraction {mass:.3e} above {threshold:.1e}"
        logger.warning(msg)
        warnings.append(msg)
    return SineTransform(dst(u, grid.h), grid.wavenumbers, mass, warnings)


def inverse_sine_transform(grid: RadialGrid, coeffs: np.ndarray) -> np.ndarray:
    return idst(np.asarray(coeffs), grid.h)


# -----------------------------
# Oscillatory integrals
# -----------------------------
@dataclass
class OscillatoryResult:
    value: complex
    tail_error: float
    truncation: float


def _as_callable(f: Amplitude) -> Tuple[Callable[[np.ndarray], np.ndarray], Optional[float]]:
    if callable(f):
        return f, None
    s, values = f
    s = np.asarray(s, dtype=float)
    values = np.asarray(values)
    re = CubicSpline(s, values.real)
    im = CubicSpline(s, values.imag) if np.iscomplexobj(values) else None
    s_end = float(s[-1])

    def spline(x: np.ndarray) -> np.ndarray:
        out = re(x) + (1j * im(x) if im is not None else 0.0)
        return np.where(x <= s_end, out, 0.0)

    return spline, s_end


def _panel_integral(g: Callable[[np.ndarray], np.ndarray], a: float, b: float, width: float) -> complex:
    if b <= a:
        return 0.0
    m = max(1, int(np.ceil((b - a) / width)))
    edges = np.linspace(a, b, m + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    w = (half[:, None] * _GL_W[None, :]).ravel()
    return complex(np.sum(g(x) * w))


def oscillatory_integral(
    f: Amplitude,
    phase_rate: float,
    order: float = 0.0,
    truncation: Optional[float] = None,
    decay_tol: float = 1e-6,
) -> OscillatoryResult:
    """
    Evaluate int_0^inf f(s) exp(i phase_rate s) s^order ds.

    Composite Gauss-Legendre panels no wider than min(1, 1/(4|phase_rate|))
    up to the truncation radius S; the truncation error is estimated by
    |I(S) - I(S/2)|.

    Args:
        f: callable amplitude, or (nodes, samples) interpolated by cubic spline
        phase_rate: real frequency of the oscillating factor
        order: power of the weight s^order
        truncation: radius S; defaults to 40 or the last sample node

    Returns:
        OscillatoryResult with value and tail estimate
    """
    g0, s_end = _as_callable(f)
    S = float(truncation if truncation is not None else (s_end if s_end is not None else 40.0))
    if S <= 0:
        raise ValueError(f"truncation radius must be positive, got {S}")

    def g(s: np.ndarray) -> np.ndarray:
        return g0(s) * np.exp(1j * phase_rate * s) * s**order

    probe = np.linspace(0.0, S, 801)[1:]
    env = np.abs(g0(probe) * probe**order)
    peak = env.max(initial=0.0)
    if peak > 0 and env[probe >= 0.9 * S].max() > decay_tol * peak:
        raise ValueError(
            f"amplitude does not decay before truncation radius {S:g}: "
            f"|f s^{order:g}| near S is {env[probe >= 0.9 * S].max():.3e} of its peak"
        )
    width = 1.0 if phase_rate == 0 else min(1.0, 1.0 / (4.0 * abs(phase_rate)))
    half = _panel_integral(g, 0.0, 0.5 * S, width)
    full = half + _panel_integral(g, 0.5 * S, S, width)
    return OscillatoryResult(value=full, tail_error=abs(full - half), truncation=S)


def filon_trapezoid(values: np.ndarray, h: float, omega: float, x0: float = 0.0) -> complex:
    """
    Exact int exp(-i omega x) p(x) dx for the piecewise-linear interpolant p of
    ``values`` on x_k = x0 + k h (zero outside the samples' span).
    """
    v = np.asarray(values)
    n = v.shape[0]
    x = x0 + h * np.arange(n)
    theta = omega * h
    if abs(theta) < 1e-4:
        a = h * (0.5 - 1j * theta / 6.0 - theta**2 / 24.0)
        b = h * (0.5 - 1j * theta / 3.0 - theta**2 / 8.0)
    else:
        # cell weights for the left/right endpoint values, cell origin at 0
        e = np.exp(-1j * theta)
        b = h * (1j * e / theta + (e - 1.0) / theta**2)
        a = h * (1.0 - e) / (1j * theta) - b
    phase = np.exp(-1j * omega * x)
    left = v[:-1] * phase[:-1]
    right = v[1:] * phase[:-1]
    return complex(np.sum(a * left + b * right))


# -----------------------------
# Fits and extrapolation
# -----------------------------
@dataclass
class PowerLawFit:
    exponent: float
    prefactor: float
    residual: float
    window: Tuple[float, float]
    samples: int = 0

    def predict(self, t: np.ndarray) -> np.ndarray:
        return self.prefactor * np.asarray(t, dtype=float) ** (-self.exponent)


def fit_power_law(
    t: Sequence[float],
    values: Sequence[float],
    window: Optional[Tuple[float, float]] = None,
    min_samples: int = 8,
) -> PowerLawFit:
    """
    Least-squares fit of log(value) against log(t), value ~ prefactor * t^(-exponent).

    Args:
        t: sample abscissae (positive)
        values: sample values, strictly positive inside the window
        window: [t_min, t_max]; defaults to the full range
        min_samples: minimum number of samples inside the window

    Returns:
        PowerLawFit with the RMS residual of the log-log fit
    """
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.shape != v.shape:
        raise ValueError("t and values must have the same length")
    lo, hi = window if window is not None else (float(t.min()), float(t.max()))
    mask = (t >= lo) & (t <= hi)
    if mask.sum() < min_samples:
        raise ValueError(f"fit needs at least {min_samples} samples in [{lo:g}, {hi:g}], got {int(mask.sum())}")
    bad = np.flatnonzero(mask & ~(v > 0))
    if bad.size:
        i = int(bad[0])
        raise ValueError(f"nonpositive value {v[i]!r} at sample {i} (t={t[i]:g})")
    x = np.log(t[mask])
    y = np.log(v[mask])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return PowerLawFit(
        exponent=float(-slope),
        prefactor=float(np.exp(intercept)),
        residual=float(np.sqrt(np.mean(resid**2))),
        window=(float(lo), float(hi)),
        samples=int(mask.sum()),
    )


def richardson(values: Sequence, steps: Sequence[float]):
    """
    Extrapolate values(step) to step = 0 with the interpolating polynomial in
    the step through all supplied points.
    """
    steps = np.asarray(steps, dtype=float)
    vals = [np.asarray(v) for v in values]
    if len(vals) != steps.size or steps.size == 0:
        raise ValueError("richardson needs one value per step")
    if steps.size == 1:
        return vals[0]
    # Lagrange weights at 0
    out = np.zeros_like(vals[0], dtype=np.result_type(*vals, float))
    for i, si in enumerate(steps):
        others = np.delete(steps, i)
        out = out + vals[i] * np.prod(others / (others - si))
    return out
