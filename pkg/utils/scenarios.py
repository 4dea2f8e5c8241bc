"""
Scenario model, operation registry and the built-in catalog.

A scenario is a JSON file with a potential, a seed and an ordered pipeline of
operations. Each operation returns tables, scalar metrics and optional fits;
each step may state expectations on its metrics.
"""
from __future__ import annotations

import inspect
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from utils import birman, dispersive, freefield, potentials, restriction, waveop, wiener
from utils.errors import MissingParameter, NonInvertibleSymbol, ScenarioParseError, UnknownOperation
from utils.logging_config import get_logger
from utils.numerics import line_grid, radial_grid
from utils.potentials import Potential

logger = get_logger(__name__)

RNG_NAME = "numpy.random.PCG64"


# -----------------------------
# Models
# -----------------------------
class PotentialSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: str = "gaussian"
    amplitude: float = 1.0
    scale: float = 1.0
    decay: float = 3.0
    table: Optional[str] = None

    def build(self) -> Potential:
        if self.kind == "table":
            if not self.table:
                raise ScenarioParseError("potential.table: required for kind 'table'")
            return potentials.load_table(self.table)
        try:
            return Potential(kind=self.kind, amplitude=self.amplitude, scale=self.scale, decay=self.decay)
        except ValueError as e:
            raise ScenarioParseError(f"potential: {e}") from e


class Expectation(BaseModel):
    model_config = ConfigDict(extra="forbid")

    min: Optional[float] = None
    max: Optional[float] = None
    value: Optional[float] = None
    tol: Optional[float] = None
    equals: Optional[Union[bool, str, float]] = None

    def check(self, actual: Any) -> bool:
        if self.equals is not None:
            return actual == self.equals
        if actual is None:
            return False
        try:
            x = float(actual)
        except (TypeError, ValueError):
            return False
        if not np.isfinite(x) and (self.value is not None or self.max is not None):
            return False
        if self.value is not None and abs(x - self.value) > (self.tol or 0.0):
            return False
        if self.min is not None and x < self.min:
            return False
        if self.max is not None and x > self.max:
            return False
        return True


class Step(BaseModel):
    model_config = ConfigDict(extra="forbid")

    op: str
    name: Optional[str] = None
    params: Dict[str, Any] = Field(default_factory=dict)
    potential: Optional[PotentialSpec] = None
    expect: Dict[str, Expectation] = Field(default_factory=dict)

    @property
    def label(self) -> str:
        return self.name or self.op


class Scenario(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    description: str = ""
    runtime: str = ""
    potential: PotentialSpec = Field(default_factory=PotentialSpec)
    seed: int = 0
    out: Optional[str] = None
    pipeline: List[Step] = Field(default_factory=list)


def _loc(err: ValidationError) -> str:
    first = err.errors()[0]
    where = ".".join(str(p) for p in first["loc"]) or "<root>"
    return f"field {where}: {first['msg']}"


def parse_scenario(text: str, source: str = "<scenario>") -> Scenario:
    """
    Raises:
        ScenarioParseError: invalid JSON (with line and column) or an invalid field
        UnknownOperation: a step names an unregistered op
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioParseError(f"{source}: line {e.lineno}, column {e.colno}: {e.msg}") from e
    try:
        scenario = Scenario.model_validate(raw)
    except ValidationError as e:
        raise ScenarioParseError(f"{source}: {_loc(e)}") from e
    validate_pipeline(scenario)
    return scenario


def load_scenario(path: Union[str, Path]) -> Scenario:
    path = Path(path)
    if not path.exists():
        if path.stem in BUILTINS and not path.suffix:
            return builtin(path.stem)
        raise ScenarioParseError(f"scenario file not found: {path}")
    return parse_scenario(path.read_text(encoding="utf-8"), str(path))


# -----------------------------
# Operation registry
# -----------------------------
@dataclass
class OpResult:
    tables: Dict[str, pd.DataFrame] = field(default_factory=dict)
    metrics: Dict[str, Any] = field(default_factory=dict)
    fits: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)


@dataclass
class RunContext:
    potential: Potential
    seed: int
    rng: np.random.Generator


OPS: Dict[str, Callable[..., OpResult]] = {}


def op(name: str):
    def register(fn: Callable[..., OpResult]) -> Callable[..., OpResult]:
        OPS[name] = fn
        return fn

    return register


def _check_params(step: Step, index: int) -> None:
    fn = OPS[step.op]
    sig = inspect.signature(fn)
    names = [p for p in sig.parameters if p != "ctx"]
    for p in step.params:
        if p not in names:
            raise ScenarioParseError(f"pipeline.{index}.params.{p}: unknown parameter for op {step.op!r}")
    for p in names:
        if sig.parameters[p].default is inspect.Parameter.empty and p not in step.params:
            raise MissingParameter(step.op, p)


def validate_pipeline(scenario: Scenario) -> None:
    for i, step in enumerate(scenario.pipeline):
        if step.op not in OPS:
            raise UnknownOperation(step.op)
        _check_params(step, i)


def _fit_dict(fit) -> Dict[str, float]:
    return {"exponent": fit.exponent, "prefactor": fit.prefactor, "residual": fit.residual}


def _spec(d: Optional[Dict[str, Any]], fallback: Potential) -> Potential:
    return fallback if d is None else PotentialSpec.model_validate(d).build()


@op("free_decay")
def op_free_decay(ctx: RunContext, width: float = 1.0, r_max: float = 500.0, n: int = 8192, t_min: float = 5.0, t_max: float = 50.0, samples: int = 32) -> OpResult:
    grid = radial_grid(r_max, n)
    f = freefield.gaussian_packet(grid, width)
    times = np.geomspace(t_min, t_max, samples)
    sup, fit, reflected = freefield.sup_norm_decay(f, times, (t_min, t_max))
    table = pd.DataFrame({"t": times, "sup": sup, "exponent": fit.exponent})
    return OpResult(
        {"free_decay": table},
        {"exponent": fit.exponent, "residual": fit.residual, "reflected": bool(reflected)},
        {"free_decay": {"x": "t", "y": "sup", **_fit_dict(fit)}},
    )


@op("wave_operator")
def op_wave_operator(
    ctx: RunContext,
    T: float = 50.0,
    width: float = 1.0,
    center: float = 0.0,
    k0: float = 0.0,
    dt: float = 0.01,
    r_max: float = 1200.0,
    n: int = 8192,
    s_list: Tuple[float, ...] = (0.5, 1.0, 2.0),
) -> OpResult:
    V = ctx.potential
    f = freefield.gaussian_packet(waveop.wave_grid(r_max, n), width, center, k0)
    r1 = waveop.cook_wave_operator(V, f, T, dt=dt, s_list=list(s_list))
    r2 = waveop.cook_wave_operator(V, f, 2.0 * T, dt=dt, s_list=list(s_list))
    r4 = waveop.cook_wave_operator(V, f, 4.0 * T, dt=dt)
    cauchy_1 = f.with_values(r2.wf.values - r1.wf.values).l2
    cauchy_2 = f.with_values(r4.wf.values - r2.wf.values).l2
    table = pd.DataFrame(
        {
            "T": [T, 2.0 * T],
            "isometry_defect": [r1.isometry_defect, r2.isometry_defect],
            "extrapolated_isometry_defect": [r1.extrapolated_isometry_defect, r2.extrapolated_isometry_defect],
            "intertwining_defect": [r1.intertwining_defect, r2.intertwining_defect],
            "cauchy_increment": [cauchy_1, cauchy_2],
        }
    )
    return OpResult(
        {"wave_operator": table, "cook_integrand": r4.integrand},
        {
            "isometry_defect": r1.isometry_defect / f.l2,
            "intertwining_defect": r1.intertwining_defect / f.l2,
            "isometry_ratio": r2.isometry_defect / max(r1.isometry_defect, 1e-300),
            "intertwining_ratio": r2.intertwining_defect / max(r1.intertwining_defect, 1e-300),
            "cauchy_ratio": cauchy_2 / max(cauchy_1, 1e-300),
            "integrand_exponent": r4.decay_exponent,
        },
        warnings=r1.warnings + r2.warnings + r4.warnings,
    )


@op("w1_cross_check")
def op_w1_cross_check(ctx: RunContext, pairs: List[Dict[str, float]], T: float = 50.0, dt: float = 0.01, rho_max: float = 20.0) -> OpResult:
    """The first (V, f) pair calibrates kappa; the rest are compared with it."""
    if len(pairs) < 2:
        raise ScenarioParseError("w1_cross_check.pairs: need a calibration pair and at least one test pair")
    grid = waveop.wave_grid()
    built = []
    for p in pairs:
        V = potentials.gaussian(p.get("amplitude", 0.5), p.get("scale", 1.0))
        f = freefield.gaussian_packet(grid, p.get("width", 1.0), p.get("center", 0.0), p.get("k0", 0.0))
        built.append((V, f))
    cal = waveop.calibrate_kappa(*built[0], T=T, rho_max=rho_max, dt=dt)
    rows = [{"pair": 0, "role": "calibration", "relative_difference": cal.residual}]
    for i, (V, f) in enumerate(built[1:], start=1):
        rows.append({"pair": i, "role": "test", "relative_difference": waveop.w1_agreement(V, f, cal.empirical, T, rho_max, dt)})
    table = pd.DataFrame(rows)
    test = table[table["role"] == "test"]["relative_difference"]
    return OpResult(
        {"w1_cross_check": table},
        {"max_relative_difference": float(test.max()), "kappa_gap": cal.relative_gap, "kappa_re": cal.empirical.real, "kappa_im": cal.empirical.imag},
    )


@op("born_series")
def op_born_series(ctx: RunContext, lam_list: Tuple[float, ...] = (0.5, 1.0, 2.0), n_terms: int = 40, r_max: float = 20.0, n: int = 512) -> OpResult:
    grid = radial_grid(r_max, n)
    rows = []
    for lam in lam_list:
        rep = birman.born_series_resolvent(ctx.potential, lam, n_terms, grid=grid)
        rows.append(
            {
                "lam": lam,
                "convergent": rep.convergent,
                "difference": rep.difference if rep.difference is not None else np.nan,
                "last_ratio": rep.ratios[-1] if rep.ratios else np.nan,
                "terms": len(rep.term_norms),
            }
        )
    table = pd.DataFrame(rows)
    all_conv = bool(table["convergent"].all())
    return OpResult(
        {"born_series": table},
        {"convergent": all_conv, "max_difference": float(table["difference"].max()) if all_conv else None},
    )


@op("zero_energy")
def op_zero_energy(ctx: RunContext, levels: Tuple[int, ...] = (256, 512, 1024, 2048), r_max: float = 60.0) -> OpResult:
    rep = birman.zero_energy_report(ctx.potential, levels, r_max)
    table = pd.DataFrame(rep.sigma_trace, columns=["n", "sigma_min"])
    return OpResult(
        {"zero_energy": table},
        {
            "status": rep.status,
            "m00": rep.m00 if rep.m00 is not None and np.isfinite(rep.m00) else None,
            "sigma_slope": rep.sigma_slope,
            "null_residual": rep.null_residual,
            "negative_count": rep.negative_count,
            "negative_count_stable": rep.negative_count_stable,
        },
        warnings=rep.warnings,
    )


@op("decay_dichotomy")
def op_decay_dichotomy(
    ctx: RunContext,
    regular: Optional[Dict[str, Any]] = None,
    resonant: Optional[Dict[str, Any]] = None,
    count: int = 2,
    r_max: float = 3200.0,
    n: int = 32768,
) -> OpResult:
    reg_V = _spec(regular, potentials.gaussian(0.5))
    res_V = _spec(resonant, potentials.aubin_talenti()[0])
    family = freefield.random_radial_packets(radial_grid(r_max, n), count, seed=ctx.seed)
    cmp = dispersive.decay_comparison(reg_V, res_V, family)
    table = cmp.to_frame()
    return OpResult(
        {"decay_dichotomy": table},
        {"regular_exponent": cmp.regular.exponent, "resonant_exponent": cmp.resonant.exponent, "gap": cmp.gap, "transient_exponent": cmp.transient_exponent},
        warnings=cmp.warnings,
    )


@op("wiener_engine")
def op_wiener_engine(
    ctx: RunContext,
    r_max: float = 8.0,
    n: int = 64,
    lam_list: Tuple[float, ...] = (0.0, 0.5, 1.0, 2.0),
    neumann_terms: int = 12,
    singular: Optional[Dict[str, Any]] = None,
) -> OpResult:
    V = ctx.potential
    T = wiener.build_t_minus(V, radial_grid(r_max, n))
    S = wiener.wiener_invert(T)
    right, left = wiener.inversion_residuals(T, S)
    neumann_gap = (wiener.neumann_series(T, neumann_terms) - S).norm
    cross = wiener.cross_check_birman(T, V, lam_list)
    diag = wiener.diagnostics(T)
    scan = wiener.symbol_singularity_scan(V, raise_on_singular=False)
    flagged, flag_lam = False, None
    try:
        wiener.symbol_singularity_scan(_spec(singular, potentials.aubin_talenti()[0]))
    except NonInvertibleSymbol as e:
        flagged, flag_lam = True, e.lam
    return OpResult(
        {"wiener_continuity": diag.continuity, "wiener_tail": diag.tail, "wiener_symbol": diag.symbol, "wiener_scan": scan.sigma},
        {
            "residual_right": right,
            "residual_left": left,
            "neumann_difference": neumann_gap,
            "birman_cross_check": cross,
            "non_invertible_flagged": flagged,
            "non_invertible_lam": flag_lam,
            "continuity_rate": diag.continuity_rates.get(1),
            "zero_slope": scan.slope,
            "nonzero_sigma_min": scan.nonzero_sigma_min,
        },
        warnings=diag.warnings,
    )


@op("kato_plumbing")
def op_kato_plumbing(ctx: RunContext, r_max: float = 8.0, n: int = 64) -> OpResult:
    unit = potentials.kato_norm(potentials.gaussian(1.0))
    T = wiener.build_t_minus(ctx.potential, radial_grid(r_max, n))
    cmp = wiener.kato_comparison(ctx.potential, T)
    table = pd.DataFrame([{"gaussian_kato_norm": unit, **cmp}])
    return OpResult({"kato_plumbing": table}, {"gaussian_kato_norm": unit, **cmp})


@op("stein_tomas")
def op_stein_tomas(
    ctx: RunContext,
    xi_range: Tuple[float, float] = (5.0, 100.0),
    j_list: Tuple[int, ...] = (1, 2, 3, 4, 5, 6),
    delta_list: Tuple[float, ...] = (0.25, 0.125, 0.0625, 0.03125),
) -> OpResult:
    decay = restriction.sigma_hat_decay(3, tuple(xi_range))
    tomas = restriction.tomas_dyadic_norms(j_list)
    knapp = restriction.knapp_ratio(delta_list)
    return OpResult(
        {"tomas_dyadic": tomas.to_frame(), "knapp": knapp.to_frame()},
        {
            "sigma_decay_exponent": decay.exponent,
            "slope_1_inf": tomas.slope_1_inf,
            "slope_2_2": tomas.slope_2_2,
            "critical_p": tomas.critical_p,
            "knapp_variation": knapp.ratio_variation,
            "long_axis_exponent": knapp.long_axis_exponent,
            "transverse_exponent": knapp.transverse_exponent,
            "height_exponent": knapp.height_exponent,
        },
        {"tomas_dyadic": {"x": "j", "y": "norm_2_2"}},
    )


@op("strichartz_nls")
def op_strichartz_nls(ctx: RunContext, count: int = 20, scale: float = 2.0, amplitude: float = 0.05, horizon: float = 1.0, n_steps: int = 400) -> OpResult:
    seed = int(ctx.rng.integers(0, 2**31 - 1))
    small = restriction.strichartz_ratio(restriction.strichartz_family(count, seed))
    big = restriction.strichartz_ratio(restriction.strichartz_family(2 * count, seed))
    member = restriction.strichartz_family(1, seed)[0]
    base = restriction.strichartz_single(member)[0]
    scaled = restriction.strichartz_single(member.dilated(scale))[0]

    grid = line_grid(40.0, 1024)
    psi0 = freefield.gaussian_packet(grid, 1.0, amplitude=amplitude)
    run = dispersive.nls_small_data(psi0, 1, horizon, n_steps)
    return OpResult(
        {"strichartz": big.running_max, "nls_mass": run.to_frame()},
        {
            "max_ratio": big.max_ratio,
            "doubling_change": abs(big.max_ratio - small.max_ratio) / small.max_ratio,
            "scaling_change": abs(scaled - base) / base,
            "contraction": run.contraction,
            "direct_difference": run.direct_difference,
        },
    )


@op("algebra_axioms")
def op_algebra_axioms(ctx: RunContext, instances: int = 10, n: int = 4, m: int = 12) -> OpResult:
    rows = []
    lam = np.linspace(-2.0, 2.0, 9)
    for i in range(instances):
        seed = int(ctx.rng.integers(0, 2**31 - 1))
        A, B, C = (wiener.random_family(n, m, seed + j, k_min=j - 1) for j in range(3))
        lhs = wiener.convolve(wiener.convolve(A, B), C)
        rhs = wiener.convolve(A, wiener.convolve(B, C))
        assoc = (lhs - rhs).norm / max(lhs.norm, 1e-300)
        AB = wiener.convolve(A, B)
        hom = float(np.abs(wiener.fourier_transform(AB, lam) - wiener.fourier_transform(A, lam) @ wiener.fourier_transform(B, lam)).max())
        sub = AB.norm - A.norm * B.norm
        rows.append({"instance": i, "seed": seed, "associativity": assoc, "homomorphism": hom, "submultiplicative_excess": sub})
    table = pd.DataFrame(rows)
    return OpResult(
        {"algebra_axioms": table},
        {
            "max_associativity": float(table["associativity"].max()),
            "max_homomorphism": float(table["homomorphism"].max()),
            "max_submultiplicative_excess": float(table["submultiplicative_excess"].max()),
        },
    )


# -----------------------------
# Built-in catalog
# -----------------------------
def _gauss(amplitude: float = 0.5) -> Dict[str, Any]:
    return {"kind": "gaussian", "amplitude": amplitude, "scale": 1.0}


_TALENTI = {"kind": "aubin_talenti", "amplitude": -5.0, "scale": 1.0}

_CATALOG: List[Dict[str, Any]] = [
    {
        "name": "free_decay",
        "description": "Sup-norm decay of the free radial flow over t in [5, 50]",
        "runtime": "< 1 min",
        "pipeline": [{"op": "free_decay", "expect": {"exponent": {"value": 1.5, "tol": 0.05}}}],
    },
    {
        "name": "wave_operator_isometry",
        "description": "Cook wave operator for the A = 0.5 Gaussian: isometry, intertwining and T-convergence",
        "runtime": "< 5 min",
        "potential": _gauss(),
        "pipeline": [
            {
                "op": "wave_operator",
                "expect": {
                    "isometry_defect": {"max": 1e-2},
                    "intertwining_defect": {"max": 1e-2},
                    "isometry_ratio": {"min": 0.35, "max": 0.65},
                    "intertwining_ratio": {"min": 0.35, "max": 0.65},
                    "cauchy_ratio": {"max": 0.8},
                    "integrand_exponent": {"value": 1.5, "tol": 0.15},
                },
            }
        ],
    },
    {
        "name": "w1_cross_check",
        "description": "Structure-function W1 against the Dyson first term on disjoint (V, f) pairs",
        "runtime": "< 5 min",
        "pipeline": [
            {
                "op": "w1_cross_check",
                "params": {
                    "pairs": [
                        {"amplitude": 0.3, "scale": 1.0, "width": 1.0},
                        {"amplitude": 0.5, "scale": 1.0, "width": 1.5},
                        {"amplitude": 0.2, "scale": 0.8, "width": 1.0, "k0": 0.5},
                        {"amplitude": 0.4, "scale": 1.2, "width": 2.0},
                    ]
                },
                "expect": {"max_relative_difference": {"max": 5e-2}},
            }
        ],
    },
    {
        "name": "born_vs_birman",
        "description": "Born series against Birman-Schwinger inversion; divergence for -5 W^4",
        "runtime": "< 2 min",
        "potential": _gauss(),
        "pipeline": [
            {"op": "born_series", "expect": {"convergent": {"equals": True}, "max_difference": {"max": 1e-6}}},
            {"op": "born_series", "name": "born_divergence", "potential": _TALENTI, "params": {"lam_list": [0.1]}, "expect": {"convergent": {"equals": False}}},
        ],
    },
    {
        "name": "zero_energy_classification",
        "description": "Zero-energy regularity of -5 W^4 and of the A = 0.5 Gaussian",
        "runtime": "< 5 min",
        "potential": _TALENTI,
        "pipeline": [
            {
                "op": "zero_energy",
                "expect": {
                    "status": {"equals": "non_regular"},
                    "null_residual": {"max": 1e-3},
                    "sigma_slope": {"max": -0.25},
                    "negative_count": {"value": 1, "tol": 0},
                },
            },
            {"op": "zero_energy", "name": "zero_energy_regular", "potential": _gauss(), "expect": {"status": {"equals": "regular"}, "m00": {"max": 4.0 / 3.0 * 1.1}}},
        ],
    },
    {
        "name": "resonant_decay",
        "description": "Decay loss under a zero-energy resonance after bound-state projection",
        "runtime": "< 10 min",
        "pipeline": [
            {
                "op": "decay_dichotomy",
                "params": {"regular": _gauss(), "resonant": _TALENTI},
                "expect": {
                    "regular_exponent": {"value": 1.5, "tol": 0.15},
                    "resonant_exponent": {"value": 0.5, "tol": 0.15},
                    "gap": {"value": 1.0, "tol": 0.3},
                },
            }
        ],
    },
    {
        "name": "wiener_engine",
        "description": "Operator-valued Wiener inversion of 1 + T^- for the A = 0.5 Gaussian",
        "runtime": "< 5 min",
        "potential": _gauss(),
        "pipeline": [
            {
                "op": "wiener_engine",
                "params": {"singular": _TALENTI},
                "expect": {
                    "residual_right": {"max": 1e-6},
                    "residual_left": {"max": 1e-6},
                    "neumann_difference": {"max": 1e-5},
                    "birman_cross_check": {"max": 1e-6},
                    "non_invertible_flagged": {"equals": True},
                    "nonzero_sigma_min": {"min": 1e-2},
                },
            }
        ],
    },
    {
        "name": "kato_plumbing",
        "description": "Kato norm of exp(-r^2) and the algebra-norm bound for T^-",
        "runtime": "< 1 min",
        "potential": _gauss(),
        "pipeline": [
            {
                "op": "kato_plumbing",
                "expect": {"gaussian_kato_norm": {"value": 2.0 * np.pi, "tol": 1e-4}, "relative_excess": {"max": 0.05}},
            }
        ],
    },
    {
        "name": "stein_tomas",
        "description": "Sphere-measure decay, dyadic Tomas slopes and the Knapp cap",
        "runtime": "< 5 min",
        "pipeline": [
            {
                "op": "stein_tomas",
                "expect": {
                    "sigma_decay_exponent": {"value": 1.0, "tol": 0.05},
                    "slope_1_inf": {"value": -1.0, "tol": 0.1},
                    "slope_2_2": {"value": 1.0, "tol": 0.1},
                    "critical_p": {"value": 4.0 / 3.0, "tol": 0.05},
                    "knapp_variation": {"max": 2.0},
                    "long_axis_exponent": {"value": 2.0, "tol": 0.2},
                    "transverse_exponent": {"value": 1.0, "tol": 0.2},
                    "height_exponent": {"value": -2.0, "tol": 0.2},
                },
            }
        ],
    },
    {
        "name": "strichartz_nls",
        "description": "1D L^6 Strichartz ratio and the small-data quintic NLS fixed point",
        "runtime": "< 5 min",
        "pipeline": [
            {
                "op": "strichartz_nls",
                "expect": {
                    "doubling_change": {"max": 0.1},
                    "scaling_change": {"max": 1e-3},
                    "contraction": {"max": 0.5},
                    "direct_difference": {"max": 1e-4},
                },
            }
        ],
    },
    {
        "name": "algebra_axioms",
        "description": "Associativity, Fourier homomorphism and submultiplicativity on seeded random families",
        "runtime": "< 2 min",
        "pipeline": [
            {
                "op": "algebra_axioms",
                "expect": {
                    "max_associativity": {"max": 1e-10},
                    "max_homomorphism": {"max": 1e-10},
                    "max_submultiplicative_excess": {"max": 1e-12},
                },
            }
        ],
    },
]

BUILTINS: Dict[str, Dict[str, Any]] = {c["name"]: c for c in _CATALOG}


def builtin(name: str) -> Scenario:
    if name not in BUILTINS:
        raise ScenarioParseError(f"unknown built-in scenario {name!r}")
    scenario = Scenario.model_validate(BUILTINS[name])
    validate_pipeline(scenario)
    return scenario


def list_scenarios() -> pd.DataFrame:
    return pd.DataFrame([{"name": c["name"], "description": c["description"], "runtime": c["runtime"]} for c in _CATALOG])


# -----------------------------
# Runner
# -----------------------------
@dataclass
class Assertion:
    step: str
    metric: str
    expected: Dict[str, Any]
    actual: Any
    passed: bool


@dataclass
class StepOutcome:
    step: str
    op: str
    result: OpResult
    assertions: List[Assertion]
    seconds: float


def _clean(value: Any) -> Any:
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if np.isfinite(v) else None
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    return value


def execute(scenario: Scenario, seed: Optional[int] = None) -> List[StepOutcome]:
    """
    Run every step in order. Exceptions propagate; assertion failures are
    recorded in the outcomes.
    """
    validate_pipeline(scenario)
    seed = scenario.seed if seed is None else seed
    base = scenario.potential.build()
    rng = np.random.default_rng(seed)
    outcomes = []
    for step in scenario.pipeline:
        ctx = RunContext(step.potential.build() if step.potential else base, seed, rng)
        started = time.perf_counter()
        logger.info("step %s (%s)", step.label, step.op)
        result = OPS[step.op](ctx, **step.params)
        result.metrics = {k: _clean(v) for k, v in result.metrics.items()}
        checks = []
        for metric, exp in step.expect.items():
            actual = result.metrics.get(metric)
            checks.append(Assertion(step.label, metric, exp.model_dump(exclude_none=True), actual, exp.check(actual)))
            if not checks[-1].passed:
                logger.warning("assertion failed: %s.%s = %r (expected %s)", step.label, metric, actual, checks[-1].expected)
        outcomes.append(StepOutcome(step.label, step.op, result, checks, time.perf_counter() - started))
    return outcomes
