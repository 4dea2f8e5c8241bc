"""
Operator-valued Wiener algebra on the rho-line.

Elements are a * delta_0 + T where T is a kernel-valued sequence on
rho_k = k h. Convolution is the discrete linear convolution weighted by h and
the transform is the DTFT h sum_k T_k exp(-i lambda rho_k). The space X is
discretized L^1 of radial functions with measure 4 pi r^2 dr.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import fft as sfft

from utils.errors import GridError, NonInvertibleSymbol
from utils.freefield import free_resolvent_kernel
from utils.logging_config import get_logger
from utils.numerics import RadialGrid, radial_grid
from utils.potentials import Potential, kato_norm

logger = get_logger(__name__)

INVERSE_RESIDUAL = 1e-6
SINGULAR_SLOPE = -0.25
NONZERO_SIGMA_FLOOR = 1e-2

_GL_X, _GL_W = np.polynomial.legendre.leggauss(64)


# -----------------------------
# Families
# -----------------------------
@dataclass(eq=False)
class RhoKernelFamily:
    """
    unit * delta_0 * I + sum_k T_k delta_{rho_k}, rho_k = (k_min + k) h.

    ``kernels`` has shape (m, n, n); ``measure`` holds the X-norm weights.
    """

    h: float
    k_min: int
    kernels: np.ndarray
    measure: np.ndarray
    unit: complex = 0.0
    grid: Optional[RadialGrid] = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return int(self.measure.size)

    @property
    def rho(self) -> np.ndarray:
        return self.h * (self.k_min + np.arange(self.kernels.shape[0]))

    @property
    def k_max(self) -> int:
        return self.k_min + self.kernels.shape[0] - 1

    def column_mass(self) -> np.ndarray:
        """h sum_k sum_i |T_k,ij| mu_i / mu_j for each column j."""
        return self.h * np.einsum("kij,i->j", np.abs(self.kernels), self.measure) / self.measure

    @property
    def norm(self) -> float:
        """Operator norm X -> L^1(R; X), unit included."""
        if self.kernels.shape[0] == 0:
            return abs(self.unit)
        return abs(self.unit) + float(self.column_mass().max(initial=0.0))

    @property
    def integrated_norm(self) -> float:
        """int ||T(rho)||_{X->X} d rho, an upper bound for ``norm``."""
        if self.kernels.shape[0] == 0:
            return abs(self.unit)
        per = np.einsum("kij,i->kj", np.abs(self.kernels), self.measure) / self.measure[None, :]
        return abs(self.unit) + float(self.h * per.max(axis=1).sum())

    def _compatible(self, other: "RhoKernelFamily") -> None:
        if not np.isclose(self.h, other.h) or self.size != other.size or not np.allclose(self.measure, other.measure):
            raise ValueError("families live on different grids")

    def _on_range(self, lo: int, hi: int) -> np.ndarray:
        out = np.zeros((hi - lo + 1, self.size, self.size), dtype=complex)
        if self.kernels.shape[0]:
            out[self.k_min - lo : self.k_max - lo + 1] = self.kernels
        return out

    def __add__(self, other: "RhoKernelFamily") -> "RhoKernelFamily":
        self._compatible(other)
        lo, hi = min(self.k_min, other.k_min), max(self.k_max, other.k_max)
        return replace(self, k_min=lo, kernels=self._on_range(lo, hi) + other._on_range(lo, hi), unit=self.unit + other.unit)

    def __sub__(self, other: "RhoKernelFamily") -> "RhoKernelFamily":
        return self + other.scaled(-1.0)

    def scaled(self, c: complex) -> "RhoKernelFamily":
        return replace(self, kernels=c * self.kernels, unit=c * self.unit)

    def shifted(self, steps: int) -> "RhoKernelFamily":
        """T(. - steps h); the unit is not moved."""
        return replace(self, k_min=self.k_min + steps)

    def without_unit(self) -> "RhoKernelFamily":
        return replace(self, unit=0.0)

    def with_unit(self, unit: complex = 1.0) -> "RhoKernelFamily":
        return replace(self, unit=unit)

    def tail(self, R: float) -> "RhoKernelFamily":
        """T chi_{|rho| >= R}."""
        keep = (np.abs(self.rho) >= R - 1e-12 * self.h)[:, None, None]
        return replace(self, kernels=self.kernels * keep, unit=0.0)

    def trimmed(self, rel: float = 1e-18) -> "RhoKernelFamily":
        """Drop leading and trailing nodes whose mass is below rel times the largest."""
        if self.kernels.shape[0] == 0:
            return self
        mass = np.abs(self.kernels).sum(axis=(1, 2))
        big = np.flatnonzero(mass > rel * mass.max(initial=0.0))
        if big.size == 0:
            return replace(self, k_min=0, kernels=self.kernels[:0])
        return replace(self, k_min=self.k_min + int(big[0]), kernels=self.kernels[big[0] : big[-1] + 1])


def zero_family(like: RhoKernelFamily) -> RhoKernelFamily:
    return replace(like, k_min=0, kernels=like.kernels[:0].copy(), unit=0.0)


def unit_family(like: RhoKernelFamily) -> RhoKernelFamily:
    return zero_family(like).with_unit(1.0)


def random_family(n: int, m: int, seed: int = 0, h: float = 0.125, k_min: int = 0, scale: float = 1.0) -> RhoKernelFamily:
    """Seeded complex family with m nodes of n x n kernels and unit measure."""
    rng = np.random.default_rng(seed)
    K = rng.standard_normal((m, n, n)) + 1j * rng.standard_normal((m, n, n))
    return RhoKernelFamily(h=h, k_min=k_min, kernels=scale * K / (m * n), measure=np.ones(n))


# -----------------------------
# T^-
# -----------------------------
def t_minus_radial(V: Potential, r: float, rho: float, f) -> float:
    """V(r) / (2 r) int_{|r - rho|}^{r + rho} s f(s) ds by Gauss-Legendre."""
    a, b = abs(r - rho), r + rho
    s = 0.5 * (b - a) * _GL_X + 0.5 * (a + b)
    return float(V(np.array([r]))[0] / (2.0 * r) * 0.5 * (b - a) * np.sum(_GL_W * s * f(s)))


def t_minus_angular(V: Potential, r: float, rho: float, f, n_mu: int = 64) -> float:
    """(4 pi rho)^-1 V(x) int_{|x - y| = rho} f(|y|) dy with |x| = r, by quadrature over the polar angle."""
    mu, w = np.polynomial.legendre.leggauss(n_mu)
    s = np.sqrt(r**2 + rho**2 + 2.0 * r * rho * mu)
    return float(V(np.array([r]))[0] * 0.5 * rho * np.sum(w * f(s)))


def build_t_minus(V: Potential, grid: Optional[RadialGrid] = None, rho_max: Optional[float] = None) -> RhoKernelFamily:
    """
    Sample T^-(rho) on rho_k = k h with h the radial spacing.

    Entry (i, j) at rho_k is V_i s_j w_j / (2 r_i) on (|r_i - s_j|, r_i + s_j),
    halved at the two breakpoints, which lie on the rho-grid.

    Raises:
        GridError: rho_max below the largest interaction distance 2 r_max
        DivergentNormError: V has no finite Kato norm
    """
    grid = grid or radial_grid(8.0, 64)
    h = grid.h
    rho_max = 2.0 * grid.r_max if rho_max is None else rho_max
    if rho_max < 2.0 * grid.r_max - h - 1e-12:
        raise GridError(f"rho grid up to {rho_max:g} misses interactions up to {2.0 * grid.r_max - h:g}")
    measure = 4.0 * np.pi * grid.nodes**2 * grid.weights
    n = grid.n
    if V.is_zero:
        return RhoKernelFamily(h, 0, np.zeros((0, n, n), dtype=complex), measure, grid=grid)
    kato_norm(V)

    i = np.arange(n)
    lo = np.abs(i[:, None] - i[None, :])
    hi = i[:, None] + i[None, :] + 1
    k = np.arange(2 * n)[:, None, None]
    box = ((k > lo) & (k < hi)).astype(float) + 0.5 * ((k == lo) | (k == hi))
    v = V.sample(grid)
    amp = v[:, None] * (grid.nodes * grid.weights)[None, :] / (2.0 * grid.nodes[:, None])
    fam = RhoKernelFamily(h, 0, (box * amp[None, :, :]).astype(complex), measure, grid=grid)
    logger.debug("T^- family: %d rho nodes, %d x %d kernels, norm %.4g", 2 * n, n, n, fam.norm)
    return fam


def kato_comparison(V: Potential, T: RhoKernelFamily) -> Dict[str, float]:
    bound = kato_norm(V) / (4.0 * np.pi)
    return {"algebra_norm": T.norm, "kato_bound": bound, "relative_excess": (T.norm - bound) / bound if bound else 0.0}


# -----------------------------
# Convolution and transform
# -----------------------------
def _fft_length(m: int) -> int:
    return int(sfft.next_fast_len(max(1, m)))


def convolve(S: RhoKernelFamily, T: RhoKernelFamily) -> RhoKernelFamily:
    """(a + S) * (b + T) = ab + a T + b S + h sum_m S_{k-m} T_m, composed per pair."""
    S._compatible(T)
    parts = []
    if S.kernels.shape[0] and T.kernels.shape[0]:
        m = S.kernels.shape[0] + T.kernels.shape[0] - 1
        L = _fft_length(m)
        Sh = sfft.fft(S.kernels, n=L, axis=0)
        Th = sfft.fft(T.kernels, n=L, axis=0)
        prod = sfft.ifft(Sh @ Th, axis=0)[:m] * S.h
        parts.append(replace(S, k_min=S.k_min + T.k_min, kernels=prod, unit=0.0))
    out = zero_family(S).with_unit(S.unit * T.unit)
    if T.unit != 0:
        out = out + S.without_unit().scaled(T.unit)
    if S.unit != 0:
        out = out + T.without_unit().scaled(S.unit)
    for p in parts:
        out = out + p
    return out


def _check_band(T: RhoKernelFamily, lam_grid: np.ndarray) -> None:
    lam_max = float(np.abs(lam_grid).max(initial=0.0))
    if T.h * lam_max > np.pi / 4 + 1e-12:
        raise GridError(f"rho spacing {T.h:g} undersamples lambda up to {lam_max:g} (need h lambda <= pi/4)")


def fourier_transform(T: RhoKernelFamily, lam_grid: Sequence[float], check: bool = True) -> np.ndarray:
    """T^(lambda) = unit I + h sum_k exp(-i lambda rho_k) T_k, shape (len(lam_grid), n, n)."""
    lam = np.atleast_1d(np.asarray(lam_grid, dtype=float))
    if check:
        _check_band(T, lam)
    phase = np.exp(-1j * lam[:, None] * T.rho[None, :]) * T.h
    out = np.einsum("lk,kij->lij", phase, T.kernels) if T.kernels.shape[0] else np.zeros((lam.size, T.size, T.size), dtype=complex)
    if T.unit != 0:
        out = out + T.unit * np.eye(T.size)[None, :, :]
    return out


def symbol_norm(T: RhoKernelFamily, That: np.ndarray) -> np.ndarray:
    """X -> X operator norms of each T^(lambda)."""
    mu = T.measure
    return (np.einsum("lij,i->lj", np.abs(That), mu) / mu[None, :]).max(axis=1)


def trapezoid_factor(lam: np.ndarray, h: float) -> np.ndarray:
    """(lambda h / 2) cot(lambda h / 2): DTFT of a trapezoid-sampled box over its exact transform."""
    x = 0.5 * np.asarray(lam, dtype=float) * h
    with np.errstate(divide="ignore", invalid="ignore"):
        out = x / np.tan(x)
    return np.where(np.abs(x) < 1e-8, 1.0 - x**2 / 3.0, out)


def cross_check_birman(T: RhoKernelFamily, V: Potential, lam_grid: Sequence[float]) -> float:
    """Max relative deviation of T^-(lambda), trapezoid factor removed, from V R0^-(lambda^2)."""
    if T.grid is None:
        raise ValueError("cross_check_birman needs a family built on a radial grid")
    lam = np.atleast_1d(np.asarray(lam_grid, dtype=float))
    That = fourier_transform(T, lam)
    worst = 0.0
    for l, Tl, fac in zip(lam, That, trapezoid_factor(lam, T.h)):
        ref = V.sample(T.grid)[:, None] * free_resolvent_kernel(l, "-", 0.0, T.grid).entries
        worst = max(worst, float(np.abs(Tl / fac - ref).max() / np.abs(ref).max()))
    return worst


# -----------------------------
# Inversion
# -----------------------------
def _periodic_symbol(T: RhoKernelFamily, L: int) -> np.ndarray:
    arr = np.zeros((L, T.size, T.size), dtype=complex)
    for j, k in enumerate(range(T.k_min, T.k_max + 1)):
        arr[k % L] += T.kernels[j]
    return T.h * sfft.fft(arr, axis=0) + T.unit * np.eye(T.size)[None, :, :]


def _weighted_sigma_min(T: RhoKernelFamily, M: np.ndarray) -> np.ndarray:
    """Smallest singular values of M in the L^2(4 pi r^2 dr) representation."""
    d = np.sqrt(T.measure)
    return np.linalg.svd(d[None, :, None] * M / d[None, None, :], compute_uv=False)[..., -1]


def wiener_invert(
    T: RhoKernelFamily,
    window: float = 128.0,
    singular_tol: float = 1e-8,
    causal: Optional[bool] = None,
    residual_tol: Optional[float] = INVERSE_RESIDUAL,
) -> RhoKernelFamily:
    """
    S with (1 + T) * (1 + S) = 1, by inverting I + T^(lambda) at the DFT
    frequencies of a zero-padded window and transforming back.

    Args:
        T: family without unit part
        window: rho-length of the periodic window; S is read out on it
        singular_tol: smallest admissible singular value of I + T^(lambda)
        causal: place the window mostly on rho >= 0; defaults to k_min >= 0
        residual_tol: bound on both residuals of (1 + T) * (1 + S) = 1; None skips the check

    Raises:
        NonInvertibleSymbol: at the first frequency with sigma_min below singular_tol
        GridError: a residual exceeds residual_tol, i.e. S does not fit in the window
    """
    if T.kernels.shape[0] == 0 and T.unit == 0:
        return zero_family(T)
    causal = T.k_min >= 0 if causal is None else causal
    L = _fft_length(max(T.kernels.shape[0] + 1, int(np.ceil(window / T.h))))
    symbol = np.eye(T.size)[None, :, :] + _periodic_symbol(T, L)
    lam = 2.0 * np.pi * sfft.fftfreq(L, d=T.h)
    sigma = _weighted_sigma_min(T, symbol)
    bad = np.flatnonzero(sigma < singular_tol)
    if bad.size:
        j = int(bad[np.argmin(np.abs(lam[bad]))])
        raise NonInvertibleSymbol(float(lam[j]), float(sigma[j]))

    S_hat = np.linalg.inv(symbol) - np.eye(T.size)[None, :, :]
    s_per = sfft.ifft(S_hat, axis=0) / T.h
    k_lo = -(L // 8) if causal else -(L // 2)
    idx = np.arange(k_lo, k_lo + L)
    S = RhoKernelFamily(T.h, k_lo, s_per[idx % L], T.measure, 0.0, T.grid).trimmed()
    if residual_tol is not None:
        right, left = inversion_residuals(T, S)
        if max(right, left) > residual_tol:
            raise GridError(f"Wiener inverse residuals {right:.2e} (right), {left:.2e} (left) above {residual_tol:.0e} with window {L * T.h:g}")
    logger.info("Wiener inverse: L=%d, min sigma %.3e, ||S|| = %.4g", L, sigma.min(), S.norm)
    return S


def inversion_residuals(T: RhoKernelFamily, S: RhoKernelFamily) -> Tuple[float, float]:
    """Norms of (1 + T) * (1 + S) - 1 and (1 + S) * (1 + T) - 1."""
    one_t = T.with_unit(1.0)
    one_s = S.with_unit(1.0)
    right = convolve(one_t, one_s) - unit_family(T)
    left = convolve(one_s, one_t) - unit_family(T)
    return right.norm, left.norm


def neumann_series(T: RhoKernelFamily, n_terms: int = 12) -> RhoKernelFamily:
    """sum_{n=1}^{n_terms} (-1)^n T^{*n}."""
    if n_terms < 1:
        raise ValueError(f"n_terms must be >= 1, got {n_terms}")
    term = T.scaled(-1.0)
    total = term
    for _ in range(1, n_terms):
        term = convolve(term, T.scaled(-1.0)).trimmed()
        total = total + term
    return total


def power(T: RhoKernelFamily, N: int) -> RhoKernelFamily:
    out = T
    for _ in range(1, N):
        out = convolve(out, T).trimmed()
    return out


# -----------------------------
# Diagnostics
# -----------------------------
@dataclass(eq=False)
class WienerDiagnostics:
    continuity: pd.DataFrame
    tail: pd.DataFrame
    symbol: pd.DataFrame
    continuity_rates: Dict[int, float]
    warnings: List[str] = field(default_factory=list)


def diagnostics(
    T: RhoKernelFamily,
    deltas: Sequence[int] = (1, 2, 4, 8),
    radii: Sequence[float] = (1.0, 2.0, 4.0, 8.0, 16.0),
    lam_grid: Sequence[float] = (0.0, 0.5, 1.0, 2.0),
    powers: Sequence[int] = (1, 2),
) -> WienerDiagnostics:
    """
    Continuity modulus ||T^N - T^N(. - delta)|| for delta in grid steps,
    tail mass ||T chi_{|rho| >= R}||, and sigma_min of I + T^(lambda).
    """
    rows = []
    rates: Dict[int, float] = {}
    for N in powers:
        TN = power(T, N) if N > 1 else T
        mods = []
        for d in deltas:
            mod = (TN.without_unit() - TN.without_unit().shifted(d)).norm
            rows.append({"power": N, "delta": d * T.h, "modulus": mod})
            mods.append(mod)
        mods = np.asarray(mods)
        if np.all(mods > 0) and len(deltas) > 1:
            rates[N] = float(np.polyfit(np.log(np.asarray(deltas) * T.h), np.log(mods), 1)[0])
    tails = [{"R": R, "tail_mass": T.tail(R).norm} for R in radii]
    lam = np.asarray(lam_grid, dtype=float)
    symbol = np.eye(T.size)[None, :, :] + fourier_transform(T.without_unit(), lam)
    sig = _weighted_sigma_min(T, symbol)
    diag = WienerDiagnostics(
        continuity=pd.DataFrame(rows),
        tail=pd.DataFrame(tails),
        symbol=pd.DataFrame({"lam": lam, "sigma_min": sig}),
        continuity_rates=rates,
    )
    masses = diag.tail["tail_mass"].to_numpy()
    if np.any(np.diff(masses) > 1e-12 * max(masses.max(initial=0.0), 1.0)):
        msg = "tail mass increases with R"
        logger.warning(msg)
        diag.warnings.append(msg)
    return diag


@dataclass
class SingularityScan:
    levels: List[Tuple[float, int]]
    sigma: pd.DataFrame
    slope: float
    nonzero_sigma_min: Optional[float] = None


def t_minus_symbol(V: Potential, grid: RadialGrid, lam: float) -> np.ndarray:
    """DTFT of the sampled T^- at lambda without building the family."""
    fac = trapezoid_factor(np.array([lam]), grid.h)[0]
    return fac * V.sample(grid)[:, None] * free_resolvent_kernel(lam, "-", 0.0, grid).entries


def symbol_singularity_scan(
    V: Potential,
    levels: Sequence[Tuple[float, int]] = ((8.0, 32), (16.0, 128), (32.0, 512)),
    lam_probe: Sequence[float] = (0.0, 0.5, 1.0, 2.0),
    raise_on_singular: bool = True,
) -> SingularityScan:
    """
    sigma_min of I + T^-(lambda) across refinements that double r_max and halve h.

    Probe frequencies lambda >= 0.5 must stay boundedly invertible: sigma_min at
    or above NONZERO_SIGMA_FLOOR on every level.

    Raises:
        NonInvertibleSymbol: the lambda = 0 trace falls with log2 slope below -0.25
            per level, or a lambda >= 0.5 node drops below the floor
    """
    if len(levels) < 3:
        raise ValueError("symbol_singularity_scan needs at least 3 levels")
    rows = []
    for R, n in levels:
        grid = radial_grid(R, n)
        mu = 4.0 * np.pi * grid.nodes**2 * grid.weights
        d = np.sqrt(mu)
        for lam in lam_probe:
            M = np.eye(n) + t_minus_symbol(V, grid, lam)
            sig = float(np.linalg.svd(d[:, None] * M / d[None, :], compute_uv=False)[-1])
            rows.append({"r_max": R, "n": n, "lam": float(lam), "sigma_min": sig})
    table = pd.DataFrame(rows)
    zero = table[table["lam"] == 0.0]["sigma_min"].to_numpy()
    slope = float(np.polyfit(np.arange(zero.size), np.log2(np.maximum(zero, 1e-300)), 1)[0])
    away = table[table["lam"] >= 0.5]
    scan = SingularityScan(list(levels), table, slope, float(away["sigma_min"].min()) if len(away) else None)
    if not raise_on_singular:
        return scan
    if slope < SINGULAR_SLOPE:
        raise NonInvertibleSymbol(0.0, float(zero[-1]), f"I + T^(0) degenerates under refinement (slope {slope:.2f}, sigma_min {zero[-1]:.3e})")
    if scan.nonzero_sigma_min is not None and scan.nonzero_sigma_min < NONZERO_SIGMA_FLOOR:
        row = away.loc[away["sigma_min"].idxmin()]
        raise NonInvertibleSymbol(float(row["lam"]), float(row["sigma_min"]), f"I + T^-(lambda) is not boundedly invertible at lambda={row['lam']:g} (n={int(row['n'])})")
    return scan


# -----------------------------
# Scalar Wiener
# -----------------------------
def scalar_family(values: Sequence[float], h: float, k_min: int) -> RhoKernelFamily:
    v = np.asarray(values, dtype=complex)
    return RhoKernelFamily(h, k_min, v[:, None, None], np.ones(1))


def scalar_wiener_check(values: Sequence[float], h: float, k_min: int, window: Optional[float] = None) -> Tuple[np.ndarray, int, float]:
    """
    Invert delta_0 + f for scalar f sampled at rho_k = (k_min + k) h.

    The symbol counts as vanishing when min |1 + f^| on the DFT grid falls
    below the grid spacing times sup |d f^/d lambda|.

    Returns:
        (g samples, k_min of g, residual norm of (delta + f) * (delta + g) - delta)

    Raises:
        NonInvertibleSymbol: with the frequency closest to the zero
    """
    F = scalar_family(values, h, k_min)
    if not np.any(F.kernels):
        return np.zeros(1), 0, 0.0
    span = F.kernels.shape[0] * h
    window = window or max(64.0 * span, 256.0 * h)
    L = _fft_length(int(np.ceil(window / h)))
    symbol = 1.0 + _periodic_symbol(F, L)[:, 0, 0]
    lam = 2.0 * np.pi * sfft.fftfreq(L, d=h)
    slope_bound = h * float(np.sum(np.abs(F.rho * F.kernels[:, 0, 0])))
    dlam = 2.0 * np.pi / (L * h)
    j = int(np.argmin(np.abs(symbol)))
    if np.abs(symbol[j]) <= dlam * slope_bound:
        raise NonInvertibleSymbol(float(lam[j]), float(np.abs(symbol[j])), f"1 + f^ vanishes near lambda={lam[j]:.4g}")
    G = wiener_invert(F, window=window, singular_tol=0.0, causal=False, residual_tol=None)
    res, _ = inversion_residuals(F, G)
    return G.kernels[:, 0, 0], G.k_min, res
