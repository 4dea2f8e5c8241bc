import numpy as np
import pytest

from utils.errors import GridError, NonInvertibleSymbol
from utils.numerics import radial_grid
from utils.potentials import aubin_talenti, gaussian, zero_potential
from utils import wiener
from utils.wiener import (
    build_t_minus,
    convolve,
    cross_check_birman,
    diagnostics,
    fourier_transform,
    inversion_residuals,
    kato_comparison,
    neumann_series,
    random_family,
    scalar_family,
    scalar_wiener_check,
    symbol_singularity_scan,
    t_minus_angular,
    t_minus_radial,
    trapezoid_factor,
    unit_family,
    wiener_invert,
)


@pytest.fixture(scope="module")
def weak_t_minus():
    return build_t_minus(gaussian(0.5, 1.0), radial_grid(4.0, 16))


def _close(a, b, tol=1e-12):
    return (a - b).norm <= tol * max(a.norm, b.norm, 1.0)


# -----------------------------
# Algebra
# -----------------------------
def test_convolution_is_associative_and_distributive():
    A, B, C = (random_family(3, 5, seed=s, k_min=s - 1) for s in range(3))
    assert _close(convolve(convolve(A, B), C), convolve(A, convolve(B, C)))
    assert _close(convolve(A, B + C), convolve(A, B) + convolve(A, C))


def test_unit_is_neutral():
    A = random_family(3, 4, seed=5).with_unit(0.3)
    one = unit_family(A)
    assert _close(convolve(one, A), A)
    assert _close(convolve(A, one), A)


def test_norm_is_submultiplicative():
    for seed in range(5):
        A = random_family(4, 6, seed=seed, scale=3.0).with_unit(0.5)
        B = random_family(4, 3, seed=seed + 10, k_min=-2)
        assert convolve(A, B).norm <= A.norm * B.norm * (1 + 1e-12)
        assert A.norm <= A.integrated_norm * (1 + 1e-12)


def test_transform_is_multiplicative():
    A = random_family(3, 5, seed=1, k_min=-2)
    B = random_family(3, 4, seed=2, k_min=1).with_unit(1.0)
    lam = [0.0, 1.0, 3.0]
    np.testing.assert_allclose(
        fourier_transform(convolve(A, B), lam),
        fourier_transform(A, lam) @ fourier_transform(B, lam),
        atol=1e-12,
    )


def test_transform_refuses_undersampled_band():
    with pytest.raises(GridError):
        fourier_transform(random_family(2, 3), [10.0])


def test_shift_tail_and_scale():
    A = random_family(2, 8, seed=3)
    assert A.shifted(4).k_min == 4
    assert A.shifted(4).norm == pytest.approx(A.norm)
    assert A.tail(0.0).norm == pytest.approx(A.norm)
    assert A.tail(100.0).norm == 0.0
    assert A.scaled(-2.0).norm == pytest.approx(2.0 * A.norm)
    with pytest.raises(ValueError):
        A + random_family(3, 8)


# -----------------------------
# T^-
# -----------------------------
def test_radial_and_angular_forms_agree():
    V = gaussian(1.0, 1.0)
    f = lambda s: np.exp(-(s**2))
    for r, rho in [(1.0, 0.7), (0.3, 2.0), (2.5, 1.1)]:
        assert t_minus_radial(V, r, rho, f) == pytest.approx(t_minus_angular(V, r, rho, f), rel=1e-10)


def test_zero_potential_gives_empty_family():
    T = build_t_minus(zero_potential(), radial_grid(4.0, 8))
    assert T.kernels.shape[0] == 0
    assert T.norm == 0.0


def test_rho_grid_must_cover_interactions():
    with pytest.raises(GridError):
        build_t_minus(gaussian(), radial_grid(8.0, 64), rho_max=4.0)


def test_transform_matches_birman_kernel(weak_t_minus):
    assert cross_check_birman(weak_t_minus, gaussian(0.5, 1.0), [0.0, 0.5, 1.0, 2.0]) < 1e-10


def test_trapezoid_factor():
    assert trapezoid_factor(np.array([0.0]), 0.1)[0] == 1.0
    x = 0.5 * 2.0 * 0.1
    assert trapezoid_factor(np.array([2.0]), 0.1)[0] == pytest.approx(x / np.tan(x))


def test_algebra_norm_matches_kato_bound():
    T = build_t_minus(gaussian(0.5, 1.0), radial_grid(8.0, 64))
    cmp = kato_comparison(gaussian(0.5, 1.0), T)
    assert abs(cmp["relative_excess"]) < 0.05
    assert cmp["algebra_norm"] == pytest.approx(T.norm)


# -----------------------------
# Inversion
# -----------------------------
def test_wiener_inverse_is_two_sided(weak_t_minus):
    S = wiener_invert(weak_t_minus)
    right, left = inversion_residuals(weak_t_minus, S)
    assert right < 1e-6
    assert left < 1e-6


def test_wiener_inverse_checks_its_residuals(weak_t_minus):
    with pytest.raises(GridError, match="residuals"):
        wiener_invert(weak_t_minus, window=weak_t_minus.h)
    S = wiener_invert(weak_t_minus, window=weak_t_minus.h, residual_tol=None)
    assert max(inversion_residuals(weak_t_minus, S)) > 1e-6


def test_neumann_series_matches_inverse(weak_t_minus):
    S = wiener_invert(weak_t_minus)
    N = neumann_series(weak_t_minus, 12)
    assert (N - S).norm < 1e-5
    with pytest.raises(ValueError):
        neumann_series(weak_t_minus, 0)


def test_inverse_of_nothing_is_nothing():
    T = build_t_minus(zero_potential(), radial_grid(4.0, 8))
    assert wiener_invert(T).norm == 0.0


def test_diagnostics_tables(weak_t_minus):
    diag = diagnostics(weak_t_minus, radii=(0.5, 1.0, 2.0, 4.0))
    assert len(diag.continuity) == 8
    assert list(diag.tail.columns) == ["R", "tail_mass"]
    assert not diag.warnings
    assert (diag.symbol["sigma_min"] > 0).all()
    assert set(diag.continuity_rates) <= {1, 2}


def test_singularity_scan_passes_for_weak_potential():
    scan = symbol_singularity_scan(gaussian(0.5, 1.0), levels=((4.0, 16), (8.0, 64), (16.0, 256)))
    assert scan.slope > -0.25
    assert len(scan.sigma) == 12
    assert scan.nonzero_sigma_min >= 1e-2
    away = scan.sigma[scan.sigma["lam"] >= 0.5]
    assert len(away) == 9 and (1.0 / away["sigma_min"] <= 100.0).all()


def test_singularity_scan_rejects_unbounded_inverse_away_from_zero(monkeypatch):
    monkeypatch.setattr(wiener, "NONZERO_SIGMA_FLOOR", 2.0)
    levels = ((4.0, 16), (8.0, 64), (16.0, 256))
    with pytest.raises(NonInvertibleSymbol, match="boundedly invertible") as err:
        symbol_singularity_scan(gaussian(0.5, 1.0), levels=levels)
    assert err.value.lam >= 0.5
    scan = symbol_singularity_scan(gaussian(0.5, 1.0), levels=levels, raise_on_singular=False)
    assert scan.nonzero_sigma_min < 2.0


@pytest.mark.slow
def test_talenti_symbol_is_not_invertible_at_zero():
    V, _ = aubin_talenti(1.0)
    with pytest.raises(NonInvertibleSymbol) as err:
        symbol_singularity_scan(V)
    assert err.value.lam == 0.0


def test_singularity_scan_needs_three_levels():
    with pytest.raises(ValueError):
        symbol_singularity_scan(gaussian(), levels=((4.0, 16), (8.0, 64)))


# -----------------------------
# Scalar
# -----------------------------
def test_scalar_inverse_of_small_gaussian():
    h, sigma = 0.05, 0.5
    rho = h * np.arange(-60, 61)
    f = 0.5 * np.exp(-(rho**2) / (2 * sigma**2)) / (sigma * np.sqrt(2 * np.pi))
    assert h * f.sum() == pytest.approx(0.5, rel=1e-6)
    g, k_min, residual = scalar_wiener_check(f, h, -60)
    assert residual < 1e-8
    assert h * g.sum() == pytest.approx(1.0 / 1.5 - 1.0, abs=1e-8)


def test_scalar_symbol_with_a_zero_is_rejected():
    h, m = 0.1, 10
    c = np.cos(1.0)
    values = np.zeros(2 * m + 1)
    values[0] = values[-1] = -1.0 / (2 * h * c)
    with pytest.raises(NonInvertibleSymbol) as err:
        scalar_wiener_check(values, h, -m)
    assert abs(1.0 - np.cos(err.value.lam) / c) < 0.1


def test_scalar_zero_family():
    g, k_min, residual = scalar_wiener_check(np.zeros(4), 0.1, 0)
    assert residual == 0.0
    assert scalar_family([1.0, 2.0], 0.5, 3).rho[0] == pytest.approx(1.5)
