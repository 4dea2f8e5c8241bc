"""
Birman-Schwinger assembly and inversion on the radial grid.

Operators act on psi samples; the normative operator norm is the discretized
L^inf norm (max row sum). Smallest singular values are taken on the
symmetrized form I + sign(V) |V|^1/2 R0 |V|^1/2 in the weighted u-representation,
which is similar to I + R0 V.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import fft as sfft
from scipy import linalg

from utils.config import default_threads
from utils.errors import SingularAtEnergy
from utils.freefield import EnergyKernel, free_resolvent_kernel, resolvent_wavenumber
from utils.logging_config import get_logger
from utils.numerics import RadialGrid, dst, idst, radial_grid
from utils.potentials import Potential, aubin_talenti

logger = get_logger(__name__)

CONDITION_LIMIT = 1e12
SINGULAR_TOL = 1e-3


def inf_norm(M: np.ndarray) -> float:
    """Max-row-sum norm, the L^inf -> L^inf operator norm of a psi-kernel."""
    return float(np.abs(M).sum(axis=1).max(initial=0.0))


# -----------------------------
# Assembly
# -----------------------------
@dataclass(eq=False)
class BirmanSchwinger:
    kernel: EnergyKernel
    potential: np.ndarray
    lam: float
    sign: str
    eps: float
    operator: np.ndarray
    row_sum_norm: float
    symmetric: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def grid(self) -> RadialGrid:
        return self.kernel.grid

    @property
    def condition(self) -> float:
        """kappa_inf(I + R0 V)."""
        return float(np.linalg.cond(self.operator, p=np.inf))

    def sigma_min(self) -> float:
        sym = self.symmetric if self.symmetric is not None else _symmetric_form(self.kernel, self.potential)
        return float(linalg.svdvals(sym)[-1])


def _symmetric_form(kernel: EnergyKernel, v: np.ndarray) -> np.ndarray:
    g = kernel.grid
    half = np.sqrt(np.abs(v) * g.weights)
    return np.eye(g.n) + np.sign(v)[:, None] * half[:, None] * kernel.green * half[None, :]


def assemble_bs(
    V: Potential,
    lam: float,
    sign: str = "+",
    eps: float = 0.0,
    grid: Optional[RadialGrid] = None,
) -> BirmanSchwinger:
    """
    Assemble I + R0(lambda^2 +- i eps) V with quadrature weights folded in.

    Args:
        V: radial potential
        lam: frequency lambda >= 0
        sign: '+' (outgoing) or '-' (incoming)
        eps: distance from the real axis
        grid: radial grid; defaults to [0, 60] with 1024 nodes

    Returns:
        BirmanSchwinger with the max-row-sum norm of R0 V
    """
    grid = grid or radial_grid(60.0, 1024)
    kernel = free_resolvent_kernel(lam, sign, eps, grid)
    v = V.sample(grid)
    K = kernel.entries * v[None, :]
    return BirmanSchwinger(
        kernel=kernel,
        potential=v,
        lam=float(lam),
        sign=sign,
        eps=float(eps),
        operator=np.eye(grid.n) + K,
        row_sum_norm=inf_norm(K),
    )


def assemble_symmetric_bs(
    V: Potential,
    lam: float,
    sign: str = "+",
    eps: float = 0.0,
    grid: Optional[RadialGrid] = None,
) -> BirmanSchwinger:
    """Same as assemble_bs with the symmetrized operator I + U R0 |V|^1/2 attached."""
    bs = assemble_bs(V, lam, sign, eps, grid)
    bs.symmetric = _symmetric_form(bs.kernel, bs.potential)
    return bs


# -----------------------------
# Inversion
# -----------------------------
@dataclass(eq=False)
class BsInverse:
    matrix: np.ndarray
    norm: float
    residual: float
    sigma_min: float
    condition: float
    lam: float


def invert_bs(bs: BirmanSchwinger, singular_tol: float = SINGULAR_TOL) -> BsInverse:
    """
    Dense inverse of I + R0 V with its L^inf operator norm.

    Raises SingularAtEnergy when the symmetric form has a singular value
    below ``singular_tol`` or the L^inf condition number exceeds 1e12.
    """
    sigma = bs.sigma_min()
    if sigma < singular_tol:
        raise SingularAtEnergy(bs.lam, sigma)
    inv = linalg.inv(bs.operator)
    cond = inf_norm(bs.operator) * inf_norm(inv)
    if cond > CONDITION_LIMIT:
        raise SingularAtEnergy(bs.lam, sigma, f"condition {cond:.3e} above {CONDITION_LIMIT:.0e}")
    residual = inf_norm(bs.operator @ inv - np.eye(bs.grid.n))
    if residual > 1e-8:
        logger.warning("inverse residual %.3e at lam=%g", residual, bs.lam)
    return BsInverse(matrix=inv, norm=inf_norm(inv), residual=residual, sigma_min=sigma, condition=cond, lam=bs.lam)


@dataclass(eq=False)
class ResolventMatrix:
    """Dense resolvent acting on psi samples."""

    grid: RadialGrid
    lam: float
    sign: str
    eps: float
    entries: np.ndarray

    def apply(self, psi: np.ndarray) -> np.ndarray:
        return self.entries @ psi


def perturbed_resolvent(
    V: Potential,
    lam: float,
    sign: str = "+",
    eps: float = 0.0,
    grid: Optional[RadialGrid] = None,
) -> ResolventMatrix:
    """R = R0 - R0 V (I + R0 V)^-1 R0."""
    bs = assemble_bs(V, lam, sign, eps, grid)
    E = bs.kernel.entries
    K = bs.operator - np.eye(bs.grid.n)
    R = E - K @ linalg.solve(bs.operator, E)
    return ResolventMatrix(bs.grid, bs.lam, sign, bs.eps, R)


def resolvent_identity_residual(
    V: Potential,
    f: np.ndarray,
    lam: float,
    sign: str = "+",
    eps: float = 0.0,
    grid: Optional[RadialGrid] = None,
) -> float:
    """
    Relative sup residual of R(z)(H - z) f = f for band-limited radial f.

    H - z is applied spectrally on u = r f before the dense resolvent.
    """
    grid = grid or radial_grid(20.0, 2048)
    k = resolvent_wavenumber(lam, sign, eps)
    u = grid.nodes * f
    lap = idst(dst(u, grid.h) * grid.wavenumbers**2, grid.h) / grid.nodes
    h_f = lap + V.sample(grid) * f - k**2 * f
    back = perturbed_resolvent(V, lam, sign, eps, grid).apply(h_f)
    scale = np.abs(f).max()
    return float(np.abs(back - f).max() / scale)


# -----------------------------
# Born series
# -----------------------------
@dataclass(eq=False)
class BornReport:
    partial_sum: np.ndarray
    term_norms: List[float]
    ratios: List[float]
    convergent: bool
    difference: Optional[float]
    errors: List[float] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)


def born_series_resolvent(
    V: Potential,
    lam: float,
    n_terms: int = 40,
    sign: str = "+",
    eps: float = 0.0,
    grid: Optional[RadialGrid] = None,
    tol: float = 1e-6,
    track_errors: bool = False,
) -> BornReport:
    """
    Partial sums of R0 - R0 V R0 + R0 V R0 V R0 - ...

    Args:
        V: radial potential
        lam: frequency
        n_terms: number of terms to sum (>= 1)
        tol: relative size of the last term below which the series counts as converged
        track_errors: record the L^inf distance of every partial sum to the direct resolvent

    Returns:
        BornReport; on convergence ``difference`` is the relative L^inf distance
        to R0 - R0 V (I + R0 V)^-1 R0
    """
    if n_terms < 1:
        raise ValueError(f"n_terms must be >= 1, got {n_terms}")
    grid = grid or radial_grid(60.0, 1024)
    kernel = free_resolvent_kernel(lam, sign, eps, grid)
    E = kernel.entries
    VE = V.sample(grid)[:, None] * E
    direct = perturbed_resolvent(V, lam, sign, eps, grid).entries if track_errors else None

    term = E.copy()
    total = E.copy()
    norms = [inf_norm(term)]
    ratios: List[float] = []
    errors: List[float] = [inf_norm(total - direct)] if track_errors else []
    warnings: List[str] = []
    for _ in range(1, n_terms):
        term = -(term @ VE)
        nrm = inf_norm(term)
        ratios.append(nrm / norms[-1] if norms[-1] > 0 else 0.0)
        norms.append(nrm)
        if nrm == 0:
            break
        total = total + term
        if track_errors:
            errors.append(inf_norm(total - direct))
        if nrm > 1e30:
            break

    tail = ratios[-3:]
    total_norm = inf_norm(total)
    convergent = all(q < 1.0 for q in tail) and norms[-1] <= tol * max(total_norm, 1e-300)
    difference = None
    if convergent:
        ref = direct if direct is not None else perturbed_resolvent(V, lam, sign, eps, grid).entries
        difference = inf_norm(total - ref) / max(inf_norm(ref), 1e-300)
    else:
        msg = f"Born series not convergent at lam={lam:g}: last term ratio {ratios[-1] if ratios else float('nan'):.3g}"
        logger.warning(msg)
        warnings.append(msg)
    return BornReport(total, norms, ratios, convergent, difference, errors, warnings)


# -----------------------------
# Radial Hamiltonian
# -----------------------------
def radial_hamiltonian(V: Potential, grid: RadialGrid) -> np.ndarray:
    """Dense -d^2/dr^2 + V on u = r psi, Dirichlet at 0 and r_max, kinetic part diagonal in the DST."""
    S = sfft.dst(np.eye(grid.n), type=2, norm="ortho", axis=0)
    H = S.T @ (grid.wavenumbers[:, None] ** 2 * S)
    H[np.diag_indices_from(H)] += V.sample(grid)
    return 0.5 * (H + H.T)


def negative_eigenvalues(V: Potential, grid: Optional[RadialGrid] = None, threshold: float = -1e-6) -> np.ndarray:
    grid = grid or radial_grid(60.0, 1024)
    if V.is_zero:
        return np.empty(0)
    vals = linalg.eigh(radial_hamiltonian(V, grid), eigvals_only=True, subset_by_value=(-np.inf, threshold))
    return np.sort(vals)


# -----------------------------
# Zero-energy regularity
# -----------------------------
@dataclass
class RegularityReport:
    status: str = "indeterminate"
    zero_regular: Optional[bool] = None
    m00: Optional[float] = None
    m0: Optional[float] = None
    sigma_trace: List[Tuple[int, float]] = field(default_factory=list)
    sigma_slope: Optional[float] = None
    null_residual: Optional[float] = None
    negative_eigenvalues: List[float] = field(default_factory=list)
    negative_count: Optional[int] = None
    negative_count_stable: Optional[bool] = None
    sweep: List[Dict[str, Any]] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def zero_energy_report(
    V: Potential,
    refinement_levels: Sequence[int] = (256, 512, 1024, 2048),
    r_max: float = 60.0,
    null_vector: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    regular_floor: float = SINGULAR_TOL,
) -> RegularityReport:
    """
    Classify zero energy from the smallest singular value of I + (-Laplacian)^-1 V
    across grid doublings.

    A log2 slope below -0.25 per doubling is non-regular; a flat trace above
    ``regular_floor`` is regular; anything else is indeterminate. For the
    Aubin-Talenti potential the analytic resonance is used as null vector.
    """
    levels = sorted(int(n) for n in refinement_levels)
    if len(levels) < 3:
        raise ValueError(f"zero_energy_report needs at least 3 refinement levels, got {len(levels)}")
    if null_vector is None and V.kind == "aubin_talenti":
        _, null_vector = aubin_talenti(V.scale)

    report = RegularityReport()
    finest: Optional[BirmanSchwinger] = None
    for n in levels:
        bs = assemble_bs(V, 0.0, "+", 0.0, radial_grid(r_max, n))
        sigma = bs.sigma_min()
        report.sigma_trace.append((n, sigma))
        logger.debug("zero energy n=%d sigma_min=%.4e", n, sigma)
        finest = bs

    ns = np.array([n for n, _ in report.sigma_trace], dtype=float)
    sig = np.array([s for _, s in report.sigma_trace])
    slope = float(np.polyfit(np.log2(ns), np.log2(np.maximum(sig, 1e-300)), 1)[0])
    report.sigma_slope = slope
    if slope < -0.25:
        report.status = "non_regular"
        report.zero_regular = False
        report.m00 = float("inf")
    elif slope > -0.1 and sig[-1] >= regular_floor:
        report.status = "regular"
        report.zero_regular = True
        report.m00 = invert_bs(finest, singular_tol=0.0).norm
    else:
        msg = f"indeterminate zero-energy trend: slope {slope:.3f}, sigma_min {sig[-1]:.3e}"
        logger.warning(msg)
        report.warnings.append(msg)

    if null_vector is not None:
        psi = null_vector(finest.grid.nodes)
        res = finest.operator @ psi
        report.null_residual = float(np.abs(res).max() / np.abs(psi).max())

    counts = []
    for n in levels[-2:]:
        vals = negative_eigenvalues(V, radial_grid(r_max, n))
        counts.append(vals.size)
        report.negative_eigenvalues = [float(x) for x in vals]
    report.negative_count = counts[-1]
    report.negative_count_stable = counts[0] == counts[1]
    if not report.negative_count_stable:
        msg = f"negative eigenvalue count changed under refinement: {counts}"
        logger.warning(msg)
        report.warnings.append(msg)
    logger.info("zero energy status=%s slope=%.3f negatives=%d", report.status, slope, report.negative_count)
    return report


def m0_sweep(
    V: Potential,
    lam_grid: Sequence[float],
    eps_grid: Sequence[float] = (0.0,),
    grid: Optional[RadialGrid] = None,
    workers: Optional[int] = None,
    check_regularity: bool = True,
) -> RegularityReport:
    """
    M0 = max over lambda, eps and both branches of ||(I + R0(lambda^2 +- i eps) V)^-1||_inf.

    Entries are independent and evaluated on a thread pool; any singular
    entry raises SingularAtEnergy.

    Raises:
        ValueError: zero energy does not classify as regular for V
    """
    grid = grid or radial_grid(60.0, 512)
    if check_regularity and not V.is_zero:
        zero = zero_energy_report(V, (256, 512, 1024))
        if zero.zero_regular is not True:
            raise ValueError(f"m0_sweep needs a zero-regular potential, got status {zero.status}")
    points = [(float(l), float(e), s) for l in lam_grid for e in eps_grid for s in ("+", "-")]

    def one(point: Tuple[float, float, str]) -> Dict[str, Any]:
        lam, eps, s = point
        inv = invert_bs(assemble_bs(V, lam, s, eps, grid))
        return {"lam": lam, "eps": eps, "sign": s, "norm": inv.norm, "sigma_min": inv.sigma_min}

    with ThreadPoolExecutor(max_workers=workers or default_threads()) as pool:
        rows = list(pool.map(one, points))
    table = pd.DataFrame(rows)
    report = RegularityReport(sweep=table.to_dict("records"))
    report.m0 = float(table["norm"].max())
    zero = table[(table["lam"] == 0.0) & (table["eps"] == 0.0)]
    if not zero.empty:
        report.m00 = float(zero["norm"].iloc[0])
    logger.info("M0 = %.6g over %d points", report.m0, len(rows))
    return report


def sweep_table(report: RegularityReport) -> pd.DataFrame:
    return pd.DataFrame(report.sweep)
