import numpy as np
import pytest
from scipy.integrate import dblquad

from chandra.coulomb import direct_energy, hls_ratio, newton_potential, potential_at, shell_kernel_energy
from chandra.grid import RadialDensity, RadialGrid, rescale
from densities import gaussian, random_smooth_density, unit_ball


def test_ball_potential():
    ball = unit_ball(1.0)
    phi = newton_potential(ball)
    r = ball.r
    assert phi[0] == pytest.approx(1.5, rel=1e-13)
    assert np.allclose(phi, (3 - r * r) / 2, rtol=1e-12)
    outside = np.array([1.0, 2.0, 7.5])
    assert np.allclose(potential_at(ball, outside), 1 / outside, rtol=1e-12)


def test_ball_potential_outside_on_larger_grid():
    ball = unit_ball(3.0, n=4096)
    phi = newton_potential(ball)
    beyond = ball.r > 1.01
    assert np.allclose(ball.r[beyond] * phi[beyond], ball.mass, rtol=1e-10)


def test_zero_density():
    zero = RadialDensity.zeros(RadialGrid.graded(128, 2.0))
    assert np.all(newton_potential(zero) == 0)
    assert direct_energy(zero) == 0.0
    with pytest.raises(ValueError):
        hls_ratio(zero)


def test_ball_direct_energy_and_hls_ratio():
    ball = unit_ball(1.0)
    assert direct_energy(ball) == pytest.approx(0.6, rel=1e-12)
    assert hls_ratio(ball) == pytest.approx(0.6 / (3 / (4 * np.pi)) ** (1 / 3), rel=1e-12)
    assert hls_ratio(ball) == pytest.approx(0.96720, abs=5e-6)


def test_gaussian_direct_energy():
    rho = gaussian(RadialGrid.graded(2048, 12.0))
    assert direct_energy(rho) == pytest.approx(1 / (2 * np.sqrt(np.pi)), rel=1e-9)


def test_potential_monotone_and_tail():
    rng = np.random.default_rng(11)
    rho = random_smooth_density(rng, RadialGrid.graded(1024, 30.0))
    phi = newton_potential(rho)
    assert np.all(np.diff(phi) <= 1e-14 * phi[0])
    assert rho.r[-1] * phi[-1] == pytest.approx(rho.mass, rel=1e-10)


def dblquad_energy(func, r_max):
    """``D = (1/2)(4 pi)^2 int int f(r) f(r') r^2 r'^2 / max(r, r') dr dr'`` by nested adaptive quadrature."""
    inner, _ = dblquad(lambda r2, r1: func(r1) * func(r2) * r2 * r2 * r1, 0, r_max, 0, lambda r1: r1,
                       epsabs=0, epsrel=1e-11)
    # the two triangles r' < r and r' > r contribute equally
    return 0.5 * (4 * np.pi) ** 2 * 2 * inner


@pytest.mark.parametrize("seed", range(5))
def test_direct_energy_matches_double_quadrature(seed):
    rng = np.random.default_rng(100 + seed)
    a = rng.uniform(0.2, 2.0, 2)
    w = rng.uniform(0.4, 1.5, 2)

    def func(r):
        return a[0] * np.exp(-(r / w[0]) ** 2) + a[1] * (1 + r * r / w[1] ** 2) ** -4

    r_max = 25.0
    grid = RadialGrid.graded(2048, r_max)
    rho = RadialDensity.from_function(grid, func)
    assert direct_energy(rho) == pytest.approx(dblquad_energy(func, r_max), rel=1e-6)


def test_shell_kernel_oracle_agrees():
    grid = RadialGrid.graded(600, 10.0)
    rho = random_smooth_density(np.random.default_rng(5), grid)
    w = grid.node_weights(2.0)
    assert shell_kernel_energy(grid.nodes, rho.values, w) == pytest.approx(direct_energy(rho), rel=1e-4)


def test_hls_ratio_invariances(profile):
    rho = gaussian(RadialGrid.graded(2048, 20.0))
    base = hls_ratio(rho)
    assert hls_ratio(rescale(rho, 2.0)) == pytest.approx(base, rel=1e-8)
    assert hls_ratio(rho.scaled(3.7)) == pytest.approx(base, rel=1e-12)
    assert hls_ratio(profile.Q) == pytest.approx(profile.sigma_f, rel=1e-12)


def test_hls_ratio_below_sharp_constant(profile):
    rng = np.random.default_rng(7)
    grid = RadialGrid.graded(1024, 20.0)
    densities = [unit_ball(1.0), gaussian(grid)] + [random_smooth_density(rng, grid) for _ in range(20)]
    for rho in densities:
        assert hls_ratio(rho) <= profile.sigma_f + 1e-3
        assert hls_ratio(rho) <= hls_ratio(profile.Q)


def test_direct_energy_scaling():
    rho = random_smooth_density(np.random.default_rng(8), RadialGrid.graded(1024, 12.0))
    for ell in (0.5, 3.0):
        assert direct_energy(rho.dilate(ell)) == pytest.approx(ell * direct_energy(rho), rel=1e-12)
