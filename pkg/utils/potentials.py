"""
Test potentials and the norms used to qualify them.

All potentials are real and radial in 3D (or even profiles on the line).
Norm calculators integrate closed forms where a kind has one and fall back
to samples of tabulated profiles.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from scipy import integrate

from utils.errors import DivergentNormError, GridError
from utils.logging_config import get_logger
from utils.numerics import PowerLawFit, RadialGrid, fit_power_law

logger = get_logger(__name__)

KINDS = ("gaussian", "yukawa", "aubin_talenti", "power_law", "ball", "table", "zero")
_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True, eq=False)
class Potential:
    """
    Real radial potential V(r).

    Args (fields):
        kind: one of KINDS
        amplitude: A
        scale: length scale a (Aubin-Talenti: the dilation lambda)
        decay: power for ``power_law``
        dimension: "3d" (radial) or "1d" (even profile on the line)
        table_r, table_v: samples for ``table``
    """

    kind: str = "gaussian"
    amplitude: float = 1.0
    scale: float = 1.0
    decay: float = 3.0
    dimension: str = "3d"
    table_r: Optional[np.ndarray] = field(default=None, repr=False)
    table_v: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}; expected one of {KINDS}")
        if self.scale <= 0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        if self.kind == "table" and (self.table_r is None or self.table_v is None):
            raise ValueError("table potentials need table_r and table_v")

    def __call__(self, r: np.ndarray) -> np.ndarray:
        r = np.abs(np.asarray(r, dtype=float))
        A, a = self.amplitude, self.scale
        if self.kind == "zero" or A == 0:
            return np.zeros_like(r)
        if self.kind == "gaussian":
            return A * np.exp(-((r / a) ** 2))
        if self.kind == "yukawa":
            with np.errstate(divide="ignore"):
                return A * np.exp(-r / a) / r
        if self.kind == "aubin_talenti":
            return A * a**2 * (1.0 + (a * r) ** 2 / 3.0) ** -2
        if self.kind == "power_law":
            return A * (1.0 + r / a) ** (-self.decay)
        if self.kind == "ball":
            return np.where(r <= a, A, 0.0)
        return np.interp(r, self.table_r, self.table_v, right=0.0)

    def sample(self, grid: RadialGrid) -> np.ndarray:
        return self(grid.nodes)

    def scaled(self, c: float) -> "Potential":
        """Return c * V."""
        tv = None if self.table_v is None else c * self.table_v
        return replace(self, amplitude=self.amplitude * c, table_v=tv)

    def dilated(self, c: float) -> "Potential":
        """Critical rescaling c^2 V(c r), under which -Laplacian + V keeps its zero-energy structure."""
        if c <= 0:
            raise ValueError(f"dilation must be positive, got {c}")
        if self.kind == "table":
            return replace(self, table_r=self.table_r / c, table_v=self.table_v * c**2)
        if self.kind == "aubin_talenti":
            return replace(self, scale=self.scale * c)
        if self.kind == "yukawa":
            return replace(self, amplitude=self.amplitude * c, scale=self.scale / c)
        return replace(self, amplitude=self.amplitude * c**2, scale=self.scale / c)

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero" or self.amplitude == 0

    @property
    def extent(self) -> float:
        """Radius beyond which the closed form is negligible or needs tail extrapolation."""
        a = self.scale
        if self.kind == "gaussian":
            return 7.0 * a
        if self.kind == "yukawa":
            return 40.0 * a
        if self.kind == "ball":
            return a
        if self.kind == "table":
            return float(self.table_r[-1])
        if self.kind == "aubin_talenti":
            return 400.0 / a
        if self.kind == "power_law":
            return 4096.0 * a
        return 1.0

    @property
    def breakpoints(self) -> List[float]:
        return [self.scale] if self.kind == "ball" else []

    @property
    def sup_abs(self) -> float:
        """sup |V|; infinite for singular kinds."""
        if self.is_zero:
            return 0.0
        if self.kind == "yukawa":
            return float("inf")
        if self.kind == "aubin_talenti":
            return abs(self.amplitude) * self.scale**2
        if self.kind == "table":
            return float(np.max(np.abs(self.table_v)))
        return abs(self.amplitude)


def zero_potential() -> Potential:
    return Potential(kind="zero", amplitude=0.0)


def gaussian(amplitude: float = 1.0, scale: float = 1.0) -> Potential:
    return Potential(kind="gaussian", amplitude=amplitude, scale=scale)


def load_table(path: Union[str, Path], dimension: str = "3d") -> Potential:
    """
    Load a tabulated potential from a two-column CSV (r, V) with a header line.
    """
    df = pd.read_csv(path)
    if df.shape[1] != 2:
        raise ValueError(f"{path}: expected two columns (r, V), found {df.shape[1]}")
    try:
        r = pd.to_numeric(df.iloc[:, 0]).to_numpy(dtype=float)
        v = pd.to_numeric(df.iloc[:, 1]).to_numpy(dtype=float)
    except ValueError as e:
        raise ValueError(f"{path}: header line required and all rows numeric ({e})") from e
    if np.any(np.diff(r) <= 0) or r[0] < 0:
        raise ValueError(f"{path}: r column must be nonnegative and strictly increasing")
    return Potential(kind="table", amplitude=1.0, dimension=dimension, table_r=r, table_v=v)


def aubin_talenti(lam_scale: float = 1.0, grid: Optional[RadialGrid] = None):
    """
    The linearization potential V = -5 W_lambda^4 and its zero-energy resonance.

    W(r) = (1 + r^2/3)^(-1/2), W_lambda(r) = lambda^(1/2) W(lambda r), and the
    resonance psi = d/dmu W_mu at mu = lambda, which behaves like 1/r.

    Returns:
        (Potential, psi) where psi is sampled on ``grid`` or returned as a callable.
    """
    if lam_scale <= 0:
        raise ValueError(f"lam_scale must be positive, got {lam_scale}")
    pot = Potential(kind="aubin_talenti", amplitude=-5.0, scale=lam_scale)

    def psi(r: np.ndarray) -> np.ndarray:
        x = lam_scale * np.asarray(r, dtype=float)
        return lam_scale**-0.5 * (1.0 + x**2 / 3.0) ** -1.5 * (0.5 - x**2 / 6.0)

    if grid is not None:
        return pot, psi(grid.nodes)
    return pot, psi


def talenti_w(r: np.ndarray, lam_scale: float = 1.0) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return lam_scale**0.5 * (1.0 + (lam_scale * r) ** 2 / 3.0) ** -0.5


# -----------------------------
# Quadrature helpers
# -----------------------------
def _gl_nodes(a: float, b: float, panels: int) -> Tuple[np.ndarray, np.ndarray]:
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    w = (half[:, None] * _GL_W[None, :]).ravel()
    return x, w


def _integrate(g: Callable[[np.ndarray], np.ndarray], a: float, b: float, breaks: List[float] = ()) -> float:
    """GL integral over [a, b] split at breakpoints, with roughly unit-resolution panels."""
    if b <= a:
        return 0.0
    pts = [a] + sorted(x for x in breaks if a < x < b) + [b]
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        panels = int(min(4096, max(4, np.ceil(8 * (hi - lo)))))
        x, w = _gl_nodes(lo, hi, panels)
        total += float(np.sum(g(x) * w))
    return total


def _log_integrate(g: Callable[[np.ndarray], np.ndarray], a: float, b: float) -> float:
    """Integrate on [a, b] with a > 0 using geometric panels (for long tails)."""
    if b <= a:
        return 0.0
    n = int(max(8, np.ceil(16 * np.log2(b / a))))
    edges = a * (b / a) ** np.linspace(0.0, 1.0, n + 1)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * _GL_X
        total += float(np.sum(g(x) * _GL_W) * 0.5 * (hi - lo))
    return total


def _radial_integral(V: Potential, g: Callable[[np.ndarray], np.ndarray], r_max: float) -> float:
    near = min(r_max, 16.0 * V.scale if V.kind != "aubin_talenti" else 16.0 / V.scale)
    total = _integrate(g, 0.0, near, V.breakpoints)
    if r_max > near:
        total += _log_integrate(g, near, r_max)
    return total


def tail_exponent(V: Potential, R: float) -> float:
    """Local decay exponent beta of |V| ~ r^(-beta) at radius R."""
    if V.kind in ("ball", "table", "zero"):
        return float("inf")
    v1, v2 = abs(float(V(np.array([R / 2]))[0])), abs(float(V(np.array([R]))[0]))
    if v2 == 0.0 or v2 < 1e-300:
        return float("inf")
    return float(np.log(v1 / v2) / np.log(2.0))


def _power_tail(V: Potential, R: float, power: float, weight_power: float) -> float:
    """
    int_R^inf |V|^power r^weight_power dr for |V| ~ |V(R)| (r/R)^(-beta).
    """
    beta = tail_exponent(V, R)
    if np.isinf(beta):
        return 0.0
    vR = abs(float(V(np.array([R]))[0]))
    if vR <= 1e-14 * max(V.sup_abs if np.isfinite(V.sup_abs) else 1.0, 1e-300):
        return 0.0
    rate = power * beta - weight_power - 1.0
    if rate <= 0:
        raise DivergentNormError(
            f"{V.kind} potential decays like r^-{beta:.3g}; the integral of |V|^{power:g} r^{weight_power:g} diverges"
        )
    return vR**power * R ** (weight_power + 1.0) / rate


# -----------------------------
# Fourier transform
# -----------------------------
def fourier_transform(V: Potential, k: np.ndarray) -> np.ndarray:
    """
    V^(|xi|) = int V(x) exp(-i x.xi) dx for radial V.
    """
    k = np.atleast_1d(np.abs(np.asarray(k, dtype=float)))
    A, a = V.amplitude, V.scale
    if V.is_zero:
        return np.zeros_like(k)
    if V.kind == "gaussian":
        return A * np.pi**1.5 * a**3 * np.exp(-(a * k) ** 2 / 4.0)
    if V.kind == "yukawa":
        return 4.0 * np.pi * A / (k**2 + a**-2)
    if V.kind == "ball":
        ka = k * a
        with np.errstate(invalid="ignore", divide="ignore"):
            out = 4.0 * np.pi * A * (np.sin(ka) - ka * np.cos(ka)) / k**3
        return np.where(ka < 1e-4, 4.0 * np.pi * A * a**3 / 3.0, out)
    out = np.empty_like(k)
    R = V.extent
    for i, kk in enumerate(k):
        if kk < 1e-12:
            out[i] = 4.0 * np.pi * _radial_integral(V, lambda r: V(r) * r**2, R)
        else:
            val, _ = integrate.quad(lambda r: V(np.array([r]))[0] * r, 0.0, np.inf, weight="sin", wvar=kk, limit=400)
            out[i] = 4.0 * np.pi * val / kk
    return out


# -----------------------------
# Norms
# -----------------------------
def lp_norm(V: Potential, p: float = 2.0) -> float:
    """(4 pi int |V|^p r^2 dr)^(1/p); p = inf gives sup |V|."""
    if V.is_zero:
        return 0.0
    if np.isinf(p):
        return V.sup_abs
    R = V.extent
    body = _radial_integral(V, lambda r: np.abs(V(r)) ** p * r**2, R)
    tail = _power_tail(V, R, p, 2.0)
    return float((4.0 * np.pi * (body + tail)) ** (1.0 / p))


def kato_profile(V: Potential, centers: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    (|x|^-1 * |V|)(r) = 4 pi [ r^-1 int_0^r |V| s^2 ds + int_r^inf |V| s ds ].

    The angular integral is done analytically; centres default to a grid on
    [0, extent].
    """
    R = V.extent
    if centers is None:
        centers = np.concatenate([[0.0], np.geomspace(1e-3 * V.scale if V.kind != "aubin_talenti" else 1e-3, R, 400)])
    centers = np.asarray(centers, dtype=float)
    outer_tail = _power_tail(V, R, 1.0, 1.0)
    out = np.empty_like(centers)
    if np.any(centers > R):
        raise ValueError(f"kato centres must lie in [0, {R:g}]")
    for i, r in enumerate(centers):
        inner = 0.0 if r == 0 else _radial_integral(V, lambda s: np.abs(V(s)) * s**2, r) / r
        outer = _outer_integral(V, r, R) + outer_tail
        out[i] = 4.0 * np.pi * (inner + outer)
    return centers, out


def _outer_integral(V: Potential, r: float, R: float) -> float:
    if r >= R:
        return 0.0
    near = min(R, 16.0 * V.scale if V.kind != "aubin_talenti" else 16.0 / V.scale)
    g = lambda s: np.abs(V(s)) * s
    total = 0.0
    if r < near:
        total += _integrate(g, r, near, V.breakpoints)
        total += _log_integrate(g, near, R)
    else:
        total += _log_integrate(g, r, R)
    return total


def kato_norm(V: Potential, centers: Optional[np.ndarray] = None) -> float:
    """
    ||V||_K = sup_x int |V(y)| / |x - y| dy for radial V, sup over radial centres.
    """
    if V.is_zero:
        return 0.0
    if V.dimension != "3d":
        raise ValueError("kato_norm is defined for 3D radial potentials")
    beta = tail_exponent(V, V.extent)
    if beta <= 2.0:
        raise DivergentNormError(f"profile is not o(r^-2) at infinity (local exponent {beta:.3g})")
    _, prof = kato_profile(V, centers)
    return float(prof.max())


@dataclass
class DyadicNorm:
    value: float
    tail: float
    shells: int
    converged: bool = True


def _shell_l2(V: Potential, lo: float, hi: float) -> float:
    if hi <= lo:
        return 0.0
    g = lambda r: V(r) ** 2 * r**2
    if lo > 0 and hi / lo > 1.5:
        val = _log_integrate(g, lo, hi)
    else:
        val = _integrate(g, lo, hi, V.breakpoints)
    return float(np.sqrt(4.0 * np.pi * max(val, 0.0)))


def b_beta_norm(V: Potential, beta: float, r_max: Optional[float] = None, homogeneous: bool = False) -> DyadicNorm:
    """
    ||V||_{B^beta} = ||1_{|x|<=1} V||_2 + sum_{j>=0} 2^(j beta) ||1_{2^j<=|x|<=2^(j+1)} V||_2.

    Shells are summed while they fit inside r_max; the remaining tail is
    extrapolated geometrically from the last two shells. ``homogeneous``
    replaces the unit-ball term by the shells j < 0.
    """
    if beta < 0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    if V.is_zero:
        return DyadicNorm(0.0, 0.0, 0)
    R = float(r_max if r_max is not None else max(4.0 * V.extent, 8.0))
    total = 0.0
    if homogeneous:
        for j in range(-40, 0):
            total += 2.0 ** (j * beta) * _shell_l2(V, 2.0**j, 2.0 ** (j + 1))
    else:
        total += _shell_l2(V, 0.0, 1.0)
    terms = []
    j = 0
    while 2.0 ** (j + 1) <= R:
        terms.append(2.0 ** (j * beta) * _shell_l2(V, 2.0**j, 2.0 ** (j + 1)))
        j += 1
    total += sum(terms)
    tail = _geometric_tail(terms)
    if tail > 0.01 * max(total, 1e-300):
        raise GridError(
            f"B^{beta:g} tail {tail:.3e} exceeds 1% of the truncated sum {total:.3e}; enlarge r_max beyond {R:g}"
        )
    return DyadicNorm(total + tail, tail, len(terms))


def _geometric_tail(terms: List[float]) -> float:
    if len(terms) < 2 or terms[-1] <= 1e-13 * sum(terms):
        return 0.0
    q = terms[-1] / terms[-2] if terms[-2] > 0 else float("inf")
    if q >= 1.0:
        return float("inf")
    return terms[-1] * q / (1.0 - q)


@dataclass
class YStarNorms:
    y_norm: float
    mq_lp: float
    y_tail: float
    converged: bool


def _shell_sup(V: Potential, lo: float, hi: float) -> float:
    r = np.linspace(lo, hi, 513)
    if lo == 0.0 and V.kind == "yukawa":
        raise DivergentNormError(f"|V| is unbounded on the shell [{lo:g}, {hi:g}]")
    vals = np.abs(V(r))
    if not np.all(np.isfinite(vals)):
        raise DivergentNormError(f"|V| is unbounded on the shell [{lo:g}, {hi:g}]")
    return float(vals.max())


def local_lq(V: Potential, r: np.ndarray, q: float, radius: float = 0.5) -> np.ndarray:
    """
    M_q(V)(x) = [int_{|y|<=radius} |V(x+y)|^q dy]^(1/q) at |x| = r, using the
    area of the radius-s sphere inside the ball around x.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    x32, w32 = np.polynomial.legendre.leggauss(32)
    out = np.empty_like(r)
    rho = radius
    for i, ri in enumerate(r):
        pieces = []
        if ri < rho:
            pieces.append((0.0, rho - ri, "full"))
            pieces.append((rho - ri, rho + ri, "cap"))
        else:
            pieces.append((ri - rho, ri + rho, "cap"))
        total = 0.0
        for lo, hi, part in pieces:
            if hi <= lo:
                continue
            s = 0.5 * (lo + hi) + 0.5 * (hi - lo) * x32
            w = 0.5 * (hi - lo) * w32
            if part == "full":
                area = 4.0 * np.pi * s**2
            else:
                area = np.pi * s * (rho**2 - (ri - s) ** 2) / ri
            total += np.sum(np.abs(V(s)) ** q * np.clip(area, 0.0, None) * w)
        out[i] = total ** (1.0 / q)
    return out


def y_star_norms(V: Potential, q: float = 1.5, outer_p: float = 2.0, r_max: Optional[float] = None) -> YStarNorms:
    """
    ||V||_Y = sum_j 2^j ||V||_{L^inf(D_j)} and ||M_q V||_{L^outer_p}.

    D_0 is the unit ball and D_j = {2^(j-1) < |x| <= 2^j} for j >= 1.
    """
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    if V.is_zero:
        return YStarNorms(0.0, 0.0, 0.0, True)
    R = float(r_max if r_max is not None else max(4.0 * V.extent, 8.0))
    terms = [_shell_sup(V, 0.0, 1.0)]
    j = 1
    while 2.0**j <= R:
        terms.append(2.0**j * _shell_sup(V, 2.0 ** (j - 1), 2.0**j))
        j += 1
    y_trunc = float(sum(terms))
    tail = _geometric_tail(terms[1:]) if len(terms) > 2 else 0.0
    converged = bool(np.isfinite(tail) and tail <= 0.01 * max(y_trunc, 1e-300))
    if not converged:
        logger.warning("Y-norm shell sums do not converge on r <= %g (tail %s)", R, tail)

    near = min(R, 16.0 * V.scale if V.kind != "aubin_talenti" else 16.0 / V.scale)
    x, w = _gl_nodes(0.0, near, int(np.ceil(4 * near)))
    if R > near:
        n = int(max(8, np.ceil(8 * np.log2(R / near))))
        edges = near * (R / near) ** np.linspace(0.0, 1.0, n + 1)
        xs = [0.5 * (lo + hi) + 0.5 * (hi - lo) * _GL_X for lo, hi in zip(edges[:-1], edges[1:])]
        ws = [0.5 * (hi - lo) * _GL_W for lo, hi in zip(edges[:-1], edges[1:])]
        x = np.concatenate([x] + xs)
        w = np.concatenate([w] + ws)
    mq = local_lq(V, x, q)
    mq_lp = float((4.0 * np.pi * np.sum(mq**outer_p * x**2 * w)) ** (1.0 / outer_p))
    return YStarNorms(y_norm=y_trunc + (tail if np.isfinite(tail) else 0.0), mq_lp=mq_lp, y_tail=float(tail), converged=converged)


def short_range_exponent(V: Potential, r_lo: Optional[float] = None, r_hi: Optional[float] = None) -> PowerLawFit:
    """Fit |V(r)| ~ r^(-exponent) on [r_lo, r_hi]; exponent > 1 means short range."""
    r_hi = r_hi or V.extent
    r_lo = r_lo or r_hi / 8.0
    r = np.geomspace(r_lo, r_hi, 32)
    return fit_power_law(r, np.abs(V(r)))


def klein_admissible(V: Potential) -> bool:
    """Kato-norm smallness ||V||_K < 4 pi."""
    return kato_norm(V) < 4.0 * np.pi


@dataclass
class NormReport:
    l2: float
    l_p: float
    kato: float
    b_beta: float
    y_norm: float
    mq_lp: float
    p: float = 1.5
    beta: float = 0.5
    q: float = 1.5
    outer_p: float = 2.0


def norm_report(V: Potential, p: float = 1.5, beta: float = 0.5, q: float = 1.5, outer_p: float = 2.0) -> NormReport:
    ys = y_star_norms(V, q, outer_p)
    return NormReport(
        l2=lp_norm(V, 2.0),
        l_p=lp_norm(V, p),
        kato=kato_norm(V),
        b_beta=b_beta_norm(V, beta).value,
        y_norm=ys.y_norm,
        mq_lp=ys.mq_lp,
        p=p,
        beta=beta,
        q=q,
        outer_p=outer_p,
    )
