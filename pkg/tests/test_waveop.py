import numpy as np
import pytest

from utils.errors import GridError, HorizonError
from utils.freefield import gaussian_packet
from utils.numerics import radial_grid
from utils.potentials import Potential, gaussian, zero_potential
from utils.waveop import (
    KAPPA,
    _tail_estimate,
    apply_w1_structure,
    calibrate_kappa,
    cook_wave_operator,
    dyson_term,
    dyson_terms,
    lp_bound_probe,
    probe_stability,
    remainder_slope,
    round_trip_fraction,
    structure_L,
    structure_L_gaussian,
    w1_agreement,
    wave_grid,
)


def test_zero_potential_gives_identity():
    f = gaussian_packet(radial_grid(20.0, 128))
    res = cook_wave_operator(zero_potential(), f, T=5.0, s_list=(1.0,))
    np.testing.assert_array_equal(res.wf.values, f.values)
    assert res.isometry_defect == 0.0
    assert res.intertwining_defect == 0.0
    w1, w2 = dyson_terms(zero_potential(), f, T=5.0)
    assert w1.l2 == 0.0 and w2.l2 == 0.0


def test_cook_wave_operator_is_nearly_isometric():
    f = gaussian_packet(wave_grid(200.0, 1024), width=1.0)
    res = cook_wave_operator(gaussian(0.5, 1.0), f, T=10.0, dt=0.05)
    assert res.extrapolated_isometry_defect < 1e-2 * f.l2
    assert res.isometry_defect == pytest.approx(abs(res.regularized.l2 - f.l2))
    assert res.isometry_defect < 5e-2 * f.l2
    assert res.decay_exponent > 1.0
    assert res.tail >= 0.0
    diff = res.wf.with_values(res.wf.values - f.values)
    assert diff.l2 > 1e-3
    assert {"t", "integrand_norm"} <= set(res.integrand.columns)
    assert res.to_dict()["norm_f"] == pytest.approx(f.l2)


def test_first_dyson_term_is_linear_in_the_potential():
    f = gaussian_packet(wave_grid(100.0, 512), width=1.0)
    a = dyson_term(gaussian(0.2, 1.0), f, 1, T=5.0, dt=0.05)
    b = dyson_term(gaussian(0.4, 1.0), f, 1, T=5.0, dt=0.05)
    np.testing.assert_allclose(b.values, 2.0 * a.values, rtol=1e-9, atol=1e-14)


def test_dyson_term_order_is_checked():
    f = gaussian_packet(radial_grid(20.0, 64))
    with pytest.raises(ValueError):
        dyson_term(gaussian(), f, 3)


def test_structure_function_closed_form_matches_quadrature():
    V = gaussian(1.3, 0.8)
    closed = structure_L(V, r_half=8.0, n=33, method="closed")
    quad = structure_L(V, r_half=8.0, n=33, method="quadrature")
    np.testing.assert_allclose(quad.values, closed.values, rtol=1e-7)
    assert closed.values[16] == pytest.approx(2.0 * 1.3 * np.pi**1.5 * 0.8)


def test_structure_function_norms_and_support():
    L = structure_L(gaussian(1.0, 1.0), r_half=16.0, n=257)
    assert L.kappa == KAPPA
    assert L.l1 > 0 and L.l2 > 0
    assert L(np.array([100.0]))[0] == 0.0
    assert L.with_kappa(2 * KAPPA).l1 == pytest.approx(2 * L.l1)
    np.testing.assert_allclose(L(np.array([0.0])), KAPPA * structure_L_gaussian(gaussian(1.0, 1.0), np.array([0.0])))


def test_structure_function_rejects_unknown_method():
    with pytest.raises(ValueError):
        structure_L(gaussian(), method="spline")
    with pytest.raises(ValueError):
        structure_L_gaussian(Potential(kind="ball"), np.zeros(2))


def test_w1_structure_needs_enough_range():
    L = structure_L(gaussian(1.0, 1.0), r_half=4.0, n=101)
    f = gaussian_packet(radial_grid(20.0, 400))
    with pytest.raises(GridError):
        apply_w1_structure(L, f, rho_max=20.0)


def test_w1_structure_of_zero_potential_vanishes():
    L = structure_L(zero_potential(), r_half=48.0, n=193)
    f = gaussian_packet(radial_grid(20.0, 200))
    out = apply_w1_structure(L, f, rho_max=10.0)
    assert out.l2 == 0.0
    assert out.grid.r_max == pytest.approx(10.0)


def test_lp_bound_table_of_identity():
    g = radial_grid(20.0, 200)
    packets = [gaussian_packet(g, width=w) for w in (0.8, 1.0, 1.5, 2.0)]
    table = lp_bound_probe(lambda f: f, [1.0, 2.0, np.inf], packets)
    np.testing.assert_allclose(table["ratio"], 1.0)
    assert set(table["family_size"]) == {2, 4}
    assert all(v == 0.0 for v in probe_stability(table).values())
    with pytest.raises(ValueError):
        lp_bound_probe(lambda f: f, [2.0], [])


def test_small_box_is_rejected_before_the_sweep():
    f = gaussian_packet(radial_grid(20.0, 256), width=1.0)
    assert round_trip_fraction(f, 20.0) > 1e-2
    with pytest.raises(GridError, match="too small"):
        cook_wave_operator(gaussian(0.5, 1.0), f, T=20.0, dt=0.1)
    big = gaussian_packet(wave_grid(400.0, 2048), width=1.0)
    assert round_trip_fraction(big, 20.0) < 1e-10


def test_integrand_tail_estimate_by_decay_rate():
    t = np.linspace(0.1, 40.0, 400)
    tail, alpha, warnings = _tail_estimate(t, t**-1.5, 40.0)
    assert alpha == pytest.approx(1.5)
    assert tail == pytest.approx(40.0**-1.5 * 40.0 / 0.5)
    assert warnings == []

    _, alpha, warnings = _tail_estimate(t, t**-1.15, 40.0)
    assert 1.0 < alpha < 1.3
    assert len(warnings) == 1 and "slower than" in warnings[0]

    with pytest.raises(HorizonError, match="not integrable"):
        _tail_estimate(t, t**-0.8, 40.0)


@pytest.mark.slow
def test_defects_halve_when_the_horizon_doubles():
    V = gaussian(0.5, 1.0)
    f = gaussian_packet(wave_grid(1200.0, 8192), width=1.0)
    r1 = cook_wave_operator(V, f, T=50.0, s_list=(1.0,))
    r2 = cook_wave_operator(V, f, T=100.0, s_list=(1.0,))
    assert r1.isometry_defect < 1e-2 * f.l2
    assert r1.intertwining_defect < 1e-2 * f.l2
    assert 0.35 <= r2.isometry_defect / r1.isometry_defect <= 0.65
    assert 0.35 <= r2.intertwining_defect / r1.intertwining_defect <= 0.65
    assert r2.decay_exponent == pytest.approx(1.5, abs=0.15)
    assert r2.warnings == []


@pytest.mark.slow
def test_structure_formula_matches_dyson_first_term():
    grid = wave_grid()
    cal = calibrate_kappa(gaussian(0.3, 1.0), gaussian_packet(grid, width=1.0))
    assert cal.residual < 5e-2
    diff = w1_agreement(gaussian(0.5, 1.0), gaussian_packet(grid, width=1.5), cal.empirical)
    assert diff < 5e-2


@pytest.mark.slow
def test_born_remainder_is_cubic_in_the_amplitude():
    f = gaussian_packet(wave_grid(300.0, 2048), width=1.0)
    slope, norms = remainder_slope(gaussian(0.5, 1.0), f, amplitudes=(0.2, 0.4), T=20.0, dt=0.02)
    assert slope >= 2.7
    assert norms[0] < norms[1]


def test_w1_lp_ratio_is_bounded_by_structure_l1_norm():
    L = structure_L(gaussian(0.5, 1.0))
    g = radial_grid(20.0, 200)
    packets = [gaussian_packet(g, width=w) for w in (0.8, 1.2, 1.6, 2.0)]
    table = lp_bound_probe(lambda f: apply_w1_structure(L, f, rho_max=20.0), [1.0, 2.0, 4.0, np.inf], packets)
    assert (table["ratio"] > 0).all()
    assert (table["ratio"] <= L.l1).all()
