import numpy as np
import pytest

from utils.errors import GridError, HorizonError
from utils.restriction import (
    LinePacket,
    _cap_box,
    cap_extension,
    cap_measure,
    cap_profile,
    circle_measure,
    circulant_norms,
    critical_index,
    dyadic_cutoff,
    gaussian_strichartz_ratio,
    knapp_ratio,
    sigma_hat,
    sigma_hat_decay,
    sigma_hat_sphere,
    smooth_step,
    sphere_for_frequency,
    sphere_measure,
    strichartz_family,
    strichartz_ratio,
    strichartz_single,
    tomas_dyadic_norms,
)


def test_smooth_step_limits():
    t = np.array([-1.0, 0.0, 0.5, 1.0, 2.0])
    np.testing.assert_allclose(smooth_step(t), [1.0, 1.0, 0.5, 0.0, 0.0])


def test_surface_masses():
    assert sphere_measure(3, 32).mass == pytest.approx(4 * np.pi, rel=1e-12)
    assert circle_measure(128).mass == pytest.approx(2 * np.pi, rel=1e-12)
    with pytest.raises(ValueError):
        sphere_measure(4)


def test_sphere_transform_matches_closed_form():
    s = sphere_for_frequency(3, 4.0)
    vals = sigma_hat(s, [0.0, 1.0, np.pi, 3.0])
    np.testing.assert_allclose(vals.real, sigma_hat_sphere(np.array([0.0, 1.0, np.pi, 3.0])), atol=1e-10)
    np.testing.assert_allclose(vals.imag, 0.0, atol=1e-10)
    assert abs(vals[2]) < 1e-10


def test_sphere_transform_is_rotation_invariant():
    s = sphere_for_frequency(3, 2.0)
    xi = np.array([[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 2.0], [2 / np.sqrt(3)] * 3])
    vals = sigma_hat(s, xi)
    np.testing.assert_allclose(vals, sigma_hat_sphere(2.0), atol=1e-8)


def test_coarse_surface_is_rejected():
    with pytest.raises(GridError):
        sigma_hat(sphere_measure(3, 8), [10.0])
    with pytest.raises(ValueError):
        sigma_hat(sphere_measure(3, 8), np.zeros((2, 2)))


@pytest.mark.parametrize("d,exponent,tol", [(3, 1.0, 0.02), (2, 0.5, 0.05)])
def test_sphere_transform_decay(d, exponent, tol):
    fit = sigma_hat_decay(d, (5.0, 40.0), 0.1)
    assert fit.exponent == pytest.approx(exponent, abs=tol)


def test_cap_measure_and_extension_agree_at_origin():
    delta = 0.25
    cap = cap_measure(delta)
    assert cap.delta == delta
    ext = cap_extension(delta, np.array([0.0]), np.array([0.0]))
    assert ext[0, 0].real == pytest.approx(cap.mass, rel=1e-6)
    assert sigma_hat(cap, [0.0])[0].real == pytest.approx(cap.mass, rel=1e-12)
    assert cap_profile(np.array([0.0]), delta)[0] == 1.0
    assert cap_profile(np.array([delta]), delta)[0] == 0.0


def test_cap_measure_rejects_large_caps():
    with pytest.raises(ValueError):
        cap_measure(0.8)
    with pytest.raises(ValueError):
        knapp_ratio(delta_list=(0.9,))


def test_dyadic_cutoffs_partition_unity():
    r = np.linspace(0.0, 60.0, 601)
    total = sum(dyadic_cutoff(r, j) for j in range(0, 7))
    np.testing.assert_allclose(total, 1.0, atol=1e-12)
    assert dyadic_cutoff(np.array([0.5]), 3)[0] == 0.0


def test_critical_index_of_sphere_slopes():
    assert critical_index(-1.0, 1.0) == pytest.approx(4.0 / 3.0)


def test_circulant_norms_match_dense_matrix(rng):
    k = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    exact, brute = circulant_norms(k, 0.1)
    assert exact[0] == pytest.approx(brute[0], rel=1e-12)
    assert exact[1] == pytest.approx(brute[1], rel=1e-10)


@pytest.mark.slow
def test_tomas_dyadic_pieces_give_critical_exponent():
    report = tomas_dyadic_norms((1, 2, 3, 4, 5, 6))
    assert report.critical_p == pytest.approx(4.0 / 3.0, abs=0.05)
    assert report.slope_1_inf < 0 < report.slope_2_2
    assert len(report.to_frame()) == 6


@pytest.mark.slow
def test_knapp_level_sets_scale_anisotropically():
    report = knapp_ratio()
    assert report.p_dual == pytest.approx(4.0)
    assert report.long_axis_exponent == pytest.approx(2.0, abs=0.15)
    assert report.transverse_exponent == pytest.approx(1.0, abs=0.15)
    assert report.ratio_variation < 1.5


def test_knapp_box_too_small_for_the_cap_transform():
    with pytest.raises(GridError, match="box edge"):
        knapp_ratio(delta_list=(1 / 4,), rho_span=8.0, z_span=20.0, n_rho=65, n_z=81, max_doublings=0)


@pytest.mark.slow
def test_knapp_box_grows_until_the_edge_is_quiet():
    rho, z, F, peak = _cap_box(1 / 4, 12.0, 40.0, 97, 101, max_doublings=3)
    assert rho[-1] > 12.0 * 4
    assert rho.size > 97 and z[-1] > 40.0 * 16
    edge = max(F[-1, :].max(), F[:, 0].max(), F[:, -1].max())
    assert edge <= 5e-2 * peak


def test_line_packet_symmetries():
    f = LinePacket(((1.0, 0.8, 0.3, 0.5),))
    x = np.linspace(-5.0, 5.0, 41)
    np.testing.assert_allclose(f.translated(1.5)(x), f(x - 1.5))
    np.testing.assert_allclose(f.modulated(2.0)(x), np.exp(2j * x) * f(x))
    np.testing.assert_allclose(f.dilated(2.0)(x), np.sqrt(2.0) * f(2.0 * x))
    assert not f.is_zero
    assert LinePacket(((0.0, 1.0, 0.0, 0.0),)).is_zero


def test_gaussian_strichartz_ratio_matches_closed_form():
    ratio, frac = strichartz_single(LinePacket(((1.0, 1.0, 0.0, 0.0),)))
    assert gaussian_strichartz_ratio() == pytest.approx(0.81302, abs=1e-5)
    assert ratio == pytest.approx(gaussian_strichartz_ratio(), rel=1e-3)
    assert frac < 1e-2


def test_strichartz_ratio_is_symmetry_invariant():
    f = LinePacket(((1.0, 1.0, 0.0, 0.0),))
    base, _ = strichartz_single(f)
    for g in (f.dilated(2.0), f.translated(3.0), f.modulated(0.5)):
        assert strichartz_single(g)[0] == pytest.approx(base, rel=1e-3)


def test_strichartz_time_box_doubles_until_the_tail_is_small():
    f = LinePacket(((1.0, 1.0, 0.0, 0.0),))
    with pytest.raises(HorizonError, match="misses"):
        strichartz_single(f, horizon=10.0, max_doublings=0)
    ratio, frac = strichartz_single(f, horizon=10.0)
    assert frac <= 1e-2
    assert ratio == pytest.approx(gaussian_strichartz_ratio(), rel=1e-3)


def test_two_bump_packet_stays_below_the_gaussian_ratio():
    f = LinePacket(((0.81, 1.05, 1.86, -0.55), (0.84, 1.09, -1.83, -0.41)))
    ratio, frac = strichartz_single(f)
    assert frac <= 1e-2
    assert ratio <= gaussian_strichartz_ratio() * (1 + 1e-3)


def test_zero_packet_has_zero_ratio():
    assert strichartz_single(LinePacket(((0.0, 1.0, 0.0, 0.0),))) == (0.0, 0.0)


@pytest.mark.slow
def test_strichartz_family_is_bounded_by_gaussians():
    report = strichartz_ratio(strichartz_family(4, seed=1), workers=2)
    assert report.max_ratio <= gaussian_strichartz_ratio() * (1 + 1e-3)
    assert len(report.running_max) == 4
    assert all(fr < 1e-2 for fr in report.tail_fractions)
    with pytest.raises(ValueError):
        strichartz_ratio([], d=2)
