import numpy as np
import pytest

from utils.errors import GridError
from utils.freefield import (
    apply_free_resolvent,
    free_kernel_point,
    free_propagate,
    free_resolvent_kernel,
    gaussian_line_evolution,
    gaussian_packet,
    imaginary_part_identity_check,
    krs_decay_probe,
    random_radial_packets,
    resolvent_identity_residual,
    resolvent_wavenumber,
    sup_norm_decay,
)
from utils.numerics import line_grid, radial_grid


def test_resolvent_wavenumber_branches():
    assert resolvent_wavenumber(2.0, "+") == pytest.approx(2.0)
    assert resolvent_wavenumber(2.0, "-") == pytest.approx(-2.0)
    kp = resolvent_wavenumber(1.0, "+", 0.5)
    km = resolvent_wavenumber(1.0, "-", 0.5)
    assert kp.imag > 0 and km.imag > 0
    assert km.real < 0
    assert km**2 == pytest.approx(complex(1.0, -0.5))
    with pytest.raises(ValueError):
        resolvent_wavenumber(-1.0)
    with pytest.raises(ValueError):
        resolvent_wavenumber(1.0, "x")


def test_radial_free_flow_matches_gaussian_closed_form():
    g = radial_grid(60.0, 2048)
    f = gaussian_packet(g, width=1.0)
    t = 1.0
    out = free_propagate(f, t)
    a = 1.0 + 2j * t
    exact = a**-1.5 * np.exp(-(g.nodes**2) / (2 * a))
    np.testing.assert_allclose(out.values, exact, atol=1e-8)
    assert out.l2 == pytest.approx(f.l2, rel=1e-10)
    assert not out.reflected


def test_line_free_flow_matches_gaussian_closed_form():
    g = line_grid(40.0, 1024)
    f = gaussian_packet(g, width=1 / np.sqrt(2))
    out = free_propagate(f, 2.0)
    np.testing.assert_allclose(out.values, gaussian_line_evolution(g.nodes, 2.0), atol=1e-8)


def test_free_flow_at_zero_time_copies():
    g = radial_grid(10.0, 128)
    f = gaussian_packet(g)
    out = free_propagate(f, 0.0)
    np.testing.assert_array_equal(out.values, f.values)
    assert out.values is not f.values


def test_reflection_is_flagged_for_long_times():
    g = radial_grid(10.0, 256)
    out = free_propagate(gaussian_packet(g), 20.0)
    assert out.reflected
    assert out.warnings


def test_sup_norm_decays_like_t_to_minus_three_halves():
    g = radial_grid(1500.0, 8192)
    f = gaussian_packet(g, width=1.0)
    times = np.geomspace(5.0, 50.0, 12)
    sup, fit, reflected = sup_norm_decay(f, times)
    assert not reflected
    assert fit.exponent == pytest.approx(1.5, abs=0.02)
    assert np.all(np.diff(sup) < 0)


def test_dense_kernel_matches_fast_application(rng):
    g = radial_grid(10.0, 200)
    psi = rng.standard_normal(200) * np.exp(-g.nodes)
    for lam, sign, eps in [(0.0, "+", 0.0), (1.3, "+", 0.0), (1.3, "-", 0.0), (0.7, "+", 0.2)]:
        K = free_resolvent_kernel(lam, sign, eps, grid=g)
        np.testing.assert_allclose(K.apply(psi), apply_free_resolvent(g, psi, lam, sign, eps), rtol=1e-10, atol=1e-12)


def test_minus_kernel_is_conjugate_of_plus_on_real_data():
    g = radial_grid(10.0, 100)
    kp = free_resolvent_kernel(1.0, "+", grid=g)
    km = free_resolvent_kernel(1.0, "-", grid=g)
    np.testing.assert_allclose(km.entries, np.conj(kp.entries), atol=1e-14)


@pytest.mark.parametrize("lam,sign,eps", [(1.0, "+", 0.0), (1.0, "-", 0.0), (0.5, "+", 0.3)])
def test_resolvent_inverts_helmholtz_operator(lam, sign, eps):
    g = radial_grid(40.0, 4096)
    f = gaussian_packet(g, width=1.0)
    assert resolvent_identity_residual(f, lam, sign, eps, support=10.0) < 5e-2


def test_free_kernel_point():
    assert free_kernel_point(1.0, 0.0) == pytest.approx(1 / (4 * np.pi))
    assert abs(free_kernel_point(2.0, 3.0, "-")) == pytest.approx(1 / (8 * np.pi))
    with pytest.raises(ValueError):
        free_kernel_point(0.0, 1.0)


def test_imaginary_part_identity_has_small_residual():
    g = radial_grid(30.0, 1024)
    f = gaussian_packet(g, width=1.0)
    check = imaginary_part_identity_check(1.0, f, r_obs=15.0, n_mu=64)
    assert check.residual < 1e-2
    assert abs(check.c) > 0


def test_imaginary_part_identity_rejects_unresolved_lambda():
    g = radial_grid(10.0, 100)
    with pytest.raises(GridError):
        imaginary_part_identity_check(100.0, gaussian_packet(g))


def test_krs_fit_with_synthetic_ratio():
    krs = krs_decay_probe(np.geomspace(1.0, 16.0, 9), family=[(1.0, 0.0)], ratio_fn=lambda lam, m: 2.0 * lam**-0.5)
    assert krs.fit.exponent == pytest.approx(0.5)
    assert krs.p_dual == pytest.approx(4.0)


def test_krs_frequencies_must_span_a_decade_with_eight_samples():
    synthetic = dict(family=[(1.0, 0.0)], ratio_fn=lambda lam, m: lam**-0.5)
    with pytest.raises(ValueError, match="at least 8"):
        krs_decay_probe([1.0, 2.0, 4.0, 8.0, 16.0], **synthetic)
    with pytest.raises(ValueError, match="decade"):
        krs_decay_probe(np.geomspace(1.0, 5.0, 8), **synthetic)
    with pytest.raises(ValueError, match="nonempty"):
        krs_decay_probe(np.geomspace(1.0, 10.0, 8), family=[])
    assert krs_decay_probe(np.geomspace(1.0, 10.0, 8), **synthetic).fit.exponent == pytest.approx(0.5)


def test_random_packets_are_seeded():
    g = radial_grid(10.0, 64)
    a = random_radial_packets(g, 3, seed=4)
    b = random_radial_packets(g, 3, seed=4)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.values, y.values)
