import numpy as np
import pytest

from utils.birman import (
    assemble_bs,
    assemble_symmetric_bs,
    born_series_resolvent,
    invert_bs,
    m0_sweep,
    negative_eigenvalues,
    resolvent_identity_residual,
    sweep_table,
    zero_energy_report,
)
from utils.errors import SingularAtEnergy
from utils.numerics import radial_grid
from utils.potentials import aubin_talenti, gaussian, kato_norm, zero_potential


def test_zero_energy_row_sum_is_kato_norm_over_four_pi():
    V = gaussian(0.8, 1.0)
    bs = assemble_bs(V, 0.0, grid=radial_grid(20.0, 1024))
    assert bs.row_sum_norm == pytest.approx(kato_norm(V) / (4 * np.pi), rel=1e-2)


def test_symmetric_form_shares_the_spectrum():
    V = gaussian(0.5, 1.0)
    bs = assemble_symmetric_bs(V, 0.7, grid=radial_grid(15.0, 200))
    ev_op = np.sort_complex(np.linalg.eigvals(bs.operator))
    ev_sym = np.sort_complex(np.linalg.eigvals(bs.symmetric))
    np.testing.assert_allclose(ev_op, ev_sym, atol=1e-8)


def test_invert_bs_for_weak_potential():
    bs = assemble_bs(gaussian(0.5, 1.0), 1.0, grid=radial_grid(20.0, 400))
    inv = invert_bs(bs)
    assert inv.residual < 1e-8
    assert 1.0 <= inv.norm < 10.0
    assert inv.sigma_min > 1e-3


def test_invert_bs_flags_singularity():
    bs = assemble_bs(gaussian(0.5, 1.0), 1.0, grid=radial_grid(20.0, 200))
    with pytest.raises(SingularAtEnergy) as err:
        invert_bs(bs, singular_tol=10.0)
    assert err.value.lam == 1.0


@pytest.mark.parametrize("sign,eps", [("+", 0.0), ("-", 0.0), ("+", 0.2)])
def test_perturbed_resolvent_inverts_hamiltonian(sign, eps):
    g = radial_grid(20.0, 1024)
    f = np.exp(-0.5 * g.nodes**2)
    assert resolvent_identity_residual(gaussian(0.5, 1.0), f, 1.0, sign, eps, grid=g) < 5e-2


def test_born_series_converges_for_small_potential():
    rep = born_series_resolvent(gaussian(0.3, 1.0), 1.0, n_terms=40, grid=radial_grid(20.0, 300), track_errors=True)
    assert rep.convergent
    assert rep.difference < 1e-5
    assert rep.errors[-1] < rep.errors[0]
    assert not rep.warnings


def test_born_series_diverges_for_strong_attraction():
    rep = born_series_resolvent(gaussian(-5.0, 1.0), 0.1, n_terms=30, grid=radial_grid(20.0, 300))
    assert not rep.convergent
    assert rep.difference is None
    assert rep.warnings


def test_born_series_rejects_empty():
    with pytest.raises(ValueError):
        born_series_resolvent(gaussian(), 1.0, n_terms=0)


def test_negative_eigenvalues():
    g = radial_grid(30.0, 400)
    assert negative_eigenvalues(zero_potential(), g).size == 0
    assert negative_eigenvalues(gaussian(-1.0, 1.0), g).size == 0
    vals = negative_eigenvalues(gaussian(-5.0, 1.0), g)
    assert vals.size == 1
    assert vals[0] < 0


def test_zero_energy_report_regular_for_weak_gaussian():
    rep = zero_energy_report(gaussian(0.5, 1.0), refinement_levels=(128, 256, 512), r_max=30.0)
    assert rep.status == "regular"
    assert rep.zero_regular
    assert np.isfinite(rep.m00)
    assert rep.negative_count == 0
    assert rep.negative_count_stable


def test_zero_energy_report_needs_three_levels():
    with pytest.raises(ValueError):
        zero_energy_report(gaussian(), refinement_levels=(128, 256))


@pytest.mark.slow
def test_talenti_resonance_is_a_null_vector():
    V, _ = aubin_talenti(1.0)
    rep = zero_energy_report(V)
    assert rep.status == "non_regular"
    assert rep.zero_regular is False
    assert rep.sigma_slope < -0.25
    assert rep.null_residual <= 1e-3
    assert rep.negative_count == 1 and rep.negative_count_stable
    assert rep.negative_eigenvalues[0] == pytest.approx(-1.21, abs=0.05)
    assert rep.sigma_trace[-1][1] < 0.1


def test_m0_sweep_tabulates_both_branches():
    rep = m0_sweep(gaussian(0.5, 1.0), [0.0, 1.0], [0.0, 0.1], grid=radial_grid(20.0, 200), workers=2)
    table = sweep_table(rep)
    assert len(table) == 8
    assert set(table["sign"]) == {"+", "-"}
    assert rep.m0 >= rep.m00 >= 1.0


def test_m0_sweep_refuses_a_zero_resonance():
    V, _ = aubin_talenti(1.0)
    with pytest.raises(ValueError, match="zero-regular"):
        m0_sweep(V, [0.0, 1.0], grid=radial_grid(20.0, 200))


def test_m0_of_zero_potential_is_one():
    rep = m0_sweep(zero_potential(), [0.0, 1.0], [0.0, 0.1], grid=radial_grid(20.0, 200))
    assert rep.m0 == pytest.approx(1.0)
