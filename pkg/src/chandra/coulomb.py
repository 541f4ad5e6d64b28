"""Newtonian potential and direct (self-interaction) energy of radial densities."""

from __future__ import annotations

import numpy as np

from .grid import FOUR_PI, RadialDensity, power_integral


def newton_potential(rho: RadialDensity) -> np.ndarray:
    """``Phi = |x|^{-1} * rho`` at the grid nodes via the shell theorem.

    ``Phi(r) = (4 pi / r) int_0^r s^2 rho ds + 4 pi int_r^inf s rho ds``.
    """
    grid = rho.grid
    inner = grid.cumulative(rho.values, 2.0)
    first = grid.cumulative(rho.values, 1.0)
    r = grid.nodes
    phi = np.empty(grid.n)
    phi[1:] = inner[1:] / r[1:] + (first[-1] - first[1:])
    phi[0] = first[-1]
    return FOUR_PI * phi


def potential_at(rho: RadialDensity, r) -> np.ndarray:
    """``Phi`` at arbitrary radii; beyond the grid it is ``mass / r``."""
    r = np.asarray(r, dtype=float)
    phi = np.interp(r, rho.r, newton_potential(rho))
    outside = r >= rho.grid.r_max
    return np.where(outside, rho.mass / np.where(outside, r, 1.0), phi)


def direct_energy(rho: RadialDensity, phi: np.ndarray | None = None) -> float:
    """``D(rho, rho) = (1/2) int rho Phi``."""
    if phi is None:
        phi = newton_potential(rho)
    return 0.5 * rho.grid.integrate(rho.values * phi)


def hls_ratio(rho: RadialDensity) -> float:
    """``D(rho,rho) / (||rho||_{4/3}^{4/3} ||rho||_1^{2/3})``; bounded above by ``sigma_f``."""
    mass = rho.mass
    if not mass > 0:
        raise ValueError("hls_ratio is undefined for the zero density")
    return direct_energy(rho) / (power_integral(rho, 4.0 / 3.0) * mass ** (2.0 / 3.0))


def shell_kernel_energy(values_r, values_rho, weights_r2) -> float:
    """Brute-force ``D`` from the pairwise kernel ``min(1/r, 1/r')``.

    ``weights_r2`` are quadrature weights for ``int f r^2 dr`` at ``values_r``.
    O(n^2); meant for checking :func:`direct_energy`.
    """
    r = np.asarray(values_r, dtype=float)
    f = np.asarray(values_rho, dtype=float) * weights_r2
    far = np.maximum(r[:, None], r[None, :])
    # the r = r' = 0 pair has zero measure
    kernel = np.divide(1.0, far, out=np.zeros_like(far), where=far > 0)
    return 0.5 * FOUR_PI ** 2 * float(f @ kernel @ f)
