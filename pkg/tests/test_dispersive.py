import numpy as np
import pytest

from utils.dispersive import (
    StrangStepper,
    RESONANT_WINDOW,
    bound_states,
    decay_comparison,
    default_dt,
    evolve,
    nls_direct,
    nls_small_data,
    project_continuum,
    spacetime_norm,
)
from utils.errors import HorizonError
from utils.freefield import free_propagate, gaussian_packet, random_radial_packets
from utils.numerics import line_grid, radial_grid
from utils.potentials import Potential, aubin_talenti, gaussian, zero_potential


def test_stepper_without_potential_is_the_free_flow():
    g = radial_grid(60.0, 1024)
    f = gaussian_packet(g)
    u = StrangStepper(g, zero_potential(), 0.1).advance(g.nodes * f.values, 1.0)
    np.testing.assert_allclose(u / g.nodes, free_propagate(f, 1.0).values, atol=1e-10)


def test_stepper_is_unitary_and_reversible():
    g = radial_grid(40.0, 512)
    f = gaussian_packet(g, width=1.5)
    stepper = StrangStepper(g, gaussian(-2.0, 1.0), 0.02)
    u0 = g.nodes * f.values
    u1 = stepper.advance(u0, 1.0)
    assert np.sum(np.abs(u1) ** 2) == pytest.approx(np.sum(np.abs(u0) ** 2), rel=1e-10)
    np.testing.assert_allclose(stepper.advance(u1, -1.0), u0, atol=1e-10)
    with pytest.raises(ValueError):
        StrangStepper(g, zero_potential(), 0.0)


def test_default_dt_shrinks_with_potential_size():
    assert default_dt(gaussian(0.5)) == pytest.approx(0.01)
    assert default_dt(gaussian(-10.0)) == pytest.approx(0.001)
    assert default_dt(Potential(kind="yukawa")) == pytest.approx(0.01)


def test_projection_removes_bound_state():
    g = radial_grid(30.0, 400)
    V = gaussian(-5.0, 1.0)
    vals, vecs = bound_states(V, g)
    assert vals.size == 1
    f = gaussian_packet(g, width=1.0)
    assert abs(vecs.T @ (g.nodes * f.values)).max() > 1e-2
    p = project_continuum(V, f)
    assert abs(vecs.T @ (g.nodes * p.values)).max() < 1e-10


def test_evolve_input_checks():
    g = radial_grid(20.0, 128)
    f = gaussian_packet(g)
    with pytest.raises(ValueError, match="mix"):
        evolve(zero_potential(), f, [-1.0, 1.0])
    with pytest.raises(ValueError):
        evolve(zero_potential(), gaussian_packet(line_grid(10.0, 64)), [1.0])


def test_evolve_hits_horizon_on_small_domain():
    g = radial_grid(10.0, 128)
    with pytest.raises(HorizonError):
        evolve(zero_potential(), gaussian_packet(g), [20.0], dt=1.0)
    with pytest.raises(HorizonError):
        evolve(zero_potential(), gaussian_packet(g), [20.0], dt=1.0, auto_enlarge=True, max_r=15.0)


def test_evolve_enlarges_domain_when_allowed():
    g = radial_grid(20.0, 256)
    run = evolve(zero_potential(), gaussian_packet(g), [10.0], dt=1.0, auto_enlarge=True, max_r=400.0)
    assert run.final.grid.r_max > 20.0
    assert run.final.grid.h == pytest.approx(g.h)


def test_free_evolution_decays_like_t_to_minus_three_halves():
    g = radial_grid(1500.0, 8192)
    run = evolve(zero_potential(), gaussian_packet(g), np.geomspace(5.0, 50.0, 10), dt=5.0)
    assert run.fit.exponent == pytest.approx(1.5, abs=0.02)
    assert run.summary()["l2_drift"] < 1e-10
    assert list(run.to_frame().columns) == ["t", "sup_norm", "l2_norm"]


def test_spacetime_norm_of_constant():
    g = line_grid(2.0, 16)
    psi = np.ones((3, 16))
    assert spacetime_norm(g, np.array([0.0, 0.5, 1.0]), psi, q=6.0) == pytest.approx(4.0 ** (1 / 6))


def _small_packet(l2=0.05):
    g = line_grid(40.0, 512)
    return gaussian_packet(g, width=1.0, amplitude=l2 / np.pi**0.25)


@pytest.mark.parametrize("sign", [1, -1])
def test_small_data_nls_contracts_and_matches_split_step(sign):
    psi0 = _small_packet()
    run = nls_small_data(psi0, sign=sign, horizon=1.0, n_steps=200)
    assert psi0.l2 == pytest.approx(0.05)
    assert run.contraction < 0.1
    assert run.direct_difference < 1e-7
    assert all(run.chain_holds)
    np.testing.assert_allclose(run.mass, psi0.l2**2, rtol=1e-6)


def test_nls_rejects_large_or_radial_data():
    with pytest.raises(ValueError, match="small-data"):
        nls_small_data(_small_packet(0.5))
    with pytest.raises(ValueError):
        nls_small_data(gaussian_packet(radial_grid(10.0, 64)))
    with pytest.raises(ValueError):
        nls_small_data(_small_packet(), sign=0)


def test_nls_direct_conserves_mass():
    psi0 = _small_packet()
    out = nls_direct(psi0, 1, 1.0, 100)
    mass = np.sum(np.abs(out) ** 2, axis=1) * psi0.grid.h
    np.testing.assert_allclose(mass, psi0.l2**2, rtol=1e-12)


def test_decay_comparison_needs_a_regular_resonant_pair():
    family = random_radial_packets(radial_grid(40.0, 256), 1, seed=0)
    with pytest.raises(ValueError, match="at least one"):
        decay_comparison(gaussian(0.5), aubin_talenti()[0], [])
    with pytest.raises(ValueError, match="regular/non-regular"):
        decay_comparison(aubin_talenti()[0], gaussian(0.5), family)


@pytest.mark.slow
def test_resonance_slows_decay_to_t_to_minus_one_half():
    family = random_radial_packets(radial_grid(3200.0, 32768), 2, seed=0)
    cmp = decay_comparison(gaussian(0.5), aubin_talenti()[0], family, probe_orthogonal=False)
    assert RESONANT_WINDOW[0] >= 20.0
    assert cmp.regular.exponent == pytest.approx(1.5, abs=0.15)
    assert cmp.resonant.exponent == pytest.approx(0.5, abs=0.15)
    assert cmp.gap == pytest.approx(1.0, abs=0.3)
    for runs in cmp.runs.values():
        assert all(run.final.grid.h == pytest.approx(3200.0 / 32768) for run in runs)
