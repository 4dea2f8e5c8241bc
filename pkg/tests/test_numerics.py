import numpy as np
import pytest

from utils.numerics import (
    boundary_mass_fraction,
    dst,
    filon_trapezoid,
    fit_power_law,
    gauss_legendre_grid,
    idst,
    line_grid,
    line_lp_norm,
    oscillatory_integral,
    radial_grid,
    radial_lp_norm,
    richardson,
    sine_transform,
)


def test_radial_grid_is_cell_centred():
    g = radial_grid(10.0, 100)
    assert g.h == pytest.approx(0.1)
    assert g.nodes[0] == pytest.approx(0.05)
    assert g.nodes[-1] == pytest.approx(9.95)
    assert g.weights.sum() == pytest.approx(10.0)


def test_radial_grid_rejects_bad_sizes():
    with pytest.raises(ValueError):
        radial_grid(0.0, 10)
    with pytest.raises(ValueError):
        radial_grid(1.0, 1)


def test_gauss_grid_has_no_spacing():
    g = gauss_legendre_grid(4.0, 8)
    assert g.integrate(g.nodes**3) == pytest.approx(4.0**4 / 4.0)
    with pytest.raises(ValueError):
        g.h


def test_line_grid_nodes_and_frequencies():
    g = line_grid(8.0, 64)
    assert g.nodes[0] == pytest.approx(-8.0)
    assert g.h == pytest.approx(0.25)
    assert g.frequencies[1] == pytest.approx(2 * np.pi / 16.0)


def test_dst_parseval_and_inverse(rng):
    g = radial_grid(5.0, 128)
    u = rng.standard_normal(128)
    c = dst(u, g.h)
    assert np.sum(c**2) == pytest.approx(g.h * np.sum(u**2))
    np.testing.assert_allclose(idst(c, g.h), u, atol=1e-12)


def test_sine_transform_of_dirichlet_mode_is_a_single_coefficient():
    g = radial_grid(10.0, 256)
    u = np.sin(g.wavenumbers[2] * g.nodes)
    st = sine_transform(g, u, threshold=1.0)
    peak = int(np.argmax(np.abs(st.coeffs)))
    assert peak == 2
    others = np.delete(np.abs(st.coeffs), 2)
    assert others.max() < 1e-10


def test_sine_transform_warns_on_boundary_mass():
    g = radial_grid(10.0, 128)
    st = sine_transform(g, np.ones(128))
    assert st.boundary_mass > 1e-8
    assert st.warnings


def test_boundary_mass_fraction_of_compact_profile_is_zero():
    g = radial_grid(10.0, 200)
    u = np.where(g.nodes < 3.0, 1.0, 0.0)
    assert boundary_mass_fraction(g, u) == 0.0


def test_lp_norms():
    g = radial_grid(2.0, 4096)
    assert radial_lp_norm(g, np.ones(g.n), 1.0) == pytest.approx(4 * np.pi * 8 / 3, rel=1e-5)
    assert radial_lp_norm(g, np.full(g.n, -3.0), np.inf) == 3.0
    lg = line_grid(4.0, 64)
    assert line_lp_norm(lg, np.ones(64), 2.0) == pytest.approx(np.sqrt(8.0))


def test_oscillatory_integral_matches_closed_form():
    a = 3.0
    res = oscillatory_integral(lambda s: np.exp(-s), a)
    assert res.value == pytest.approx(1.0 / (1.0 - 1j * a), abs=1e-10)
    assert res.tail_error < 1e-10


def test_oscillatory_integral_with_weight_and_samples():
    s = np.linspace(0.0, 40.0, 4001)
    res = oscillatory_integral((s, np.exp(-s)), 0.0, order=1.0)
    assert res.value.real == pytest.approx(1.0, rel=1e-6)


def test_oscillatory_integral_requires_decay():
    with pytest.raises(ValueError, match="does not decay"):
        oscillatory_integral(lambda s: np.ones_like(s), 1.0, truncation=10.0)


@pytest.mark.parametrize("omega", [0.0, 1e-6, 2.5])
def test_filon_is_exact_for_constants(omega):
    x = np.linspace(0.0, 1.0, 11)
    got = filon_trapezoid(np.ones_like(x), 0.1, omega)
    want = 1.0 if omega == 0 else (1 - np.exp(-1j * omega)) / (1j * omega)
    assert got == pytest.approx(want, abs=1e-10)


def test_fit_power_law_recovers_exponent():
    t = np.geomspace(1.0, 100.0, 20)
    fit = fit_power_law(t, 3.0 * t**-1.5)
    assert fit.exponent == pytest.approx(1.5)
    assert fit.prefactor == pytest.approx(3.0)
    assert fit.residual < 1e-12
    assert fit.predict(np.array([10.0]))[0] == pytest.approx(3.0 * 10**-1.5)


def test_fit_power_law_errors():
    t = np.geomspace(1.0, 100.0, 20)
    v = t**-1.0
    v[5] = 0.0
    with pytest.raises(ValueError, match="nonpositive"):
        fit_power_law(t, v)
    with pytest.raises(ValueError, match="at least"):
        fit_power_law(t, t**-1.0, window=(1.0, 2.0))


def test_richardson_removes_polynomial_error():
    steps = [0.4, 0.2, 0.1]
    vals = [1.0 + 2.0 * s - 5.0 * s**2 for s in steps]
    assert richardson(vals, steps) == pytest.approx(1.0)
