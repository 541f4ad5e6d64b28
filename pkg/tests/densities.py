"""Test densities shared across modules."""

import numpy as np

from chandra.grid import RadialDensity, RadialGrid


def unit_ball(grid_r_max=1.0, n=2048):
    """Unit-mass uniform ball on a grid whose last node is the ball's edge."""
    grid = RadialGrid.graded(n, grid_r_max)
    return RadialDensity(grid, np.where(grid.nodes <= 1.0, 3.0 / (4.0 * np.pi), 0.0))


def gaussian(grid):
    return RadialDensity.from_function(grid, lambda r: (2 * np.pi) ** -1.5 * np.exp(-r * r / 2))


def random_smooth_density(rng, grid):
    """Sum of two Gaussians and a compact polynomial bump with random shapes."""
    r = grid.nodes
    a = rng.uniform(0.2, 2.0, 3)
    w = rng.uniform(0.3, 2.0, 2)
    radius = rng.uniform(0.5, 3.0)
    bump = np.clip(1 - (r / radius) ** 2, 0, None) ** 3
    return RadialDensity(grid, a[0] * np.exp(-(r / w[0]) ** 2) + a[1] * np.exp(-(r / w[1]) ** 2) + a[2] * bump)
