import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chandra.grid import RadialDensity, RadialGrid, power_integral, rescale
from chandra.potential import PowerLawPotential, potential_energy, rescaled_potential_energy
from densities import random_smooth_density, unit_ball


def test_validation():
    for s in (0.0, 0.75, 1.0, -0.1):
        with pytest.raises(ValueError):
            PowerLawPotential(1.0, s)
    with pytest.raises(ValueError):
        PowerLawPotential(0.0, 0.5)


def test_ball_pairing():
    assert potential_energy(unit_ball(1.0), PowerLawPotential(1.0, 0.5)) == pytest.approx(-1.2, rel=1e-12)


def test_no_potential():
    assert potential_energy(unit_ball(1.0), None) == 0.0


def test_small_s_tends_to_minus_mass():
    ball = unit_ball(1.0)
    assert potential_energy(ball, PowerLawPotential(2.0, 1e-9)) == pytest.approx(-2.0 * ball.mass, rel=1e-8)


def test_holder_bound_for_ball():
    # int_{|x|<L} rho |x|^-s <= ||rho||_{4/3} || |x|^-s ||_{L^4(B_L)}, the rest <= L^-s mass
    ball = unit_ball(1.0)
    s, L = 0.5, 1.0
    lhs = -potential_energy(ball, PowerLawPotential(1.0, s))
    weight = (4 * np.pi * L ** (3 - 4 * s) / (3 - 4 * s)) ** 0.25
    rhs = weight * power_integral(ball, 4 / 3) ** 0.75 + L ** -s * ball.mass
    assert lhs <= rhs


def test_rescaled_pairing(profile):
    pot = PowerLawPotential(1.0, 0.5)
    w = profile.Q
    value, pref = rescaled_potential_energy(w, pot, 1.0)
    assert pref == 1.0
    assert value == potential_energy(w, pot)
    for eps in (1e-3, 0.1, 7.0):
        value, pref = rescaled_potential_energy(w, pot, eps)
        assert pref == pytest.approx(eps ** -0.5, rel=1e-15)
        assert eps ** 0.5 * value == pytest.approx(-profile.moment(0.5), rel=1e-14)
    with pytest.raises(ValueError):
        rescaled_potential_energy(w, pot, 0.0)


def test_first_cell_constant_density_moment():
    grid = RadialGrid.graded(512, 1.0)
    s = 0.3
    moment = grid.cell_integrals(np.ones(grid.n), 2 - s)[0]
    r1 = grid.nodes[1]
    assert moment == pytest.approx(r1 ** (3 - s) / (3 - s), rel=1e-10)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), ell=st.floats(0.5, 2.0), s=st.floats(0.05, 0.7))
def test_homogeneity_and_sign(seed, ell, s):
    grid = RadialGrid.graded(8192, 20.0)
    rho = random_smooth_density(np.random.default_rng(seed), grid)
    pot = PowerLawPotential(1.3, s)
    base = potential_energy(rho, pot)
    assert base < 0
    assert potential_energy(rescale(rho, ell), pot) == pytest.approx(ell ** s * base, rel=1e-6)


def test_on_nodes_avoids_singularity():
    grid = RadialGrid.graded(64, 1.0)
    v = PowerLawPotential(1.0, 0.5).on_nodes(grid.nodes)
    assert np.all(np.isfinite(v))
    assert v[0] == pytest.approx(-(grid.nodes[1] / 2) ** -0.5)


def test_scaled_potential():
    pot = PowerLawPotential(2.0, 0.4)
    length = 0.3
    x = np.array([0.5, 1.0, 3.0])
    assert np.allclose(pot.scaled(length)(x), length * pot(length * x), rtol=1e-14)


def test_zero_density_pairing():
    zero = RadialDensity.zeros(RadialGrid.graded(64, 1.0))
    assert potential_energy(zero, PowerLawPotential()) == 0.0
