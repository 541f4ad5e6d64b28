"""Semiclassical relativistic kinetic energy density of a Fermi gas.

``j_m(rho)`` is the energy of the filled Fermi ball of radius
``eta = (6 pi^2 rho / q)**(1/3)`` with dispersion ``sqrt(p^2 + m^2)``;
``j_tilde_m(rho)`` integrates ``1 / sqrt(p^2 + m^2)`` over the same ball.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import RadialDensity

# below this eta/m the closed forms cancel catastrophically; use the series
_SERIES_CUTOFF = 1e-2


@dataclass(frozen=True)
class PhysicalParams:
    """Spin multiplicity ``q`` and particle mass ``m`` (``m = 0`` only for limits)."""

    q: int = 2
    m: float = 1.0

    def __post_init__(self):
        if int(self.q) != self.q or self.q < 1:
            raise ValueError(f"q must be a positive integer, got {self.q}")
        if self.m < 0:
            raise ValueError(f"m must be non-negative, got {self.m}")

    @property
    def K_cl(self) -> float:
        """Massless (ultra-relativistic) Thomas-Fermi constant ``(3/4)(6 pi^2/q)**(1/3)``."""
        return classical_constant(self.q)

    def tau_c(self, sigma_f: float) -> float:
        """Critical interaction strength ``K_cl / sigma_f``."""
        return self.K_cl / sigma_f

    def with_mass(self, m: float) -> PhysicalParams:
        return PhysicalParams(self.q, m)


def classical_constant(q: int) -> float:
    return 0.75 * (6.0 * np.pi ** 2 / q) ** (1.0 / 3.0)


def fermi_momentum(rho, q: int):
    """``eta = (6 pi^2 rho / q)**(1/3)``."""
    return np.cbrt(6.0 * np.pi ** 2 * np.asarray(rho, dtype=float) / q)


def density_from_momentum(eta, q: int):
    return q * np.asarray(eta, dtype=float) ** 3 / (6.0 * np.pi ** 2)


def _as_density(rho):
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise ValueError("density must be non-negative")
    return rho


def j_m(rho, params: PhysicalParams):
    """Kinetic energy density ``j_m(rho)``; vectorised over ``rho``."""
    rho = _as_density(rho)
    q, m = params.q, params.m
    if m == 0:
        return params.K_cl * rho ** (4.0 / 3.0)
    eta = fermi_momentum(rho, q)
    t = (eta / m) ** 2
    small = eta < _SERIES_CUTOFF * m
    out = np.empty_like(rho)
    ts = t[small]
    out[small] = m * rho[small] * (1 + ts * (3 / 10 + ts * (-3 / 56 + ts * (1 / 48 - ts * 15 / 1408))))
    e = eta[~small]
    root = np.sqrt(e * e + m * m)
    out[~small] = q / (16 * np.pi ** 2) * (e * (2 * e * e + m * m) * root - m ** 4 * np.arcsinh(e / m))
    return out if out.ndim else float(out)


def j_tilde_m(rho, params: PhysicalParams):
    """Companion density ``(q/(2pi)^3) int_{|p|<eta} dp / sqrt(p^2+m^2)``."""
    rho = _as_density(rho)
    q, m = params.q, params.m
    eta = fermi_momentum(rho, q)
    if m == 0:
        out = q / (4 * np.pi ** 2) * eta ** 2
        return out if np.ndim(out) else float(out)
    t = (eta / m) ** 2
    small = eta < _SERIES_CUTOFF * m
    out = np.empty_like(rho)
    ts = t[small]
    out[small] = rho[small] / m * (1 + ts * (-3 / 10 + ts * (9 / 56 + ts * (-5 / 48 + ts * 105 / 1408))))
    e = eta[~small]
    out[~small] = q / (4 * np.pi ** 2) * (e * np.sqrt(e * e + m * m) - m * m * np.arcsinh(e / m))
    return out if out.ndim else float(out)


def dj_drho(rho, params: PhysicalParams):
    """Derivative ``j_m'(rho) = sqrt(eta^2 + m^2)``."""
    eta = fermi_momentum(_as_density(rho), params.q)
    out = np.sqrt(eta * eta + params.m ** 2)
    return out if np.ndim(out) else float(out)


def density_from_level(level, params: PhysicalParams):
    """Inverse of :func:`dj_drho`: ``rho`` with ``sqrt(eta^2+m^2) = level``; 0 below ``m``."""
    level = np.asarray(level, dtype=float)
    m = params.m
    eta2 = np.maximum(level, m) ** 2 - m * m
    return params.q / (6.0 * np.pi ** 2) * eta2 ** 1.5


def kinetic_energy(rho: RadialDensity, params: PhysicalParams) -> float:
    """``int j_m(rho(x)) dx``."""
    return rho.grid.integrate(j_m(rho.values, params))


def kinetic_tilde(rho: RadialDensity, params: PhysicalParams) -> float:
    """``int j_tilde_m(rho(x)) dx``."""
    return rho.grid.integrate(j_tilde_m(rho.values, params))


def bound_margins(rho, params: PhysicalParams) -> dict:
    """Slack in the pointwise bounds on ``j_m``; a bound holds where its margin is >= 0.

    ``product`` is the stated ``j_m j_tilde_m >= (9/8) rho^2``.  The
    two-sided bound that actually holds, ``rho^2 <= j_m j_tilde_m < (9/8) rho^2``,
    is reported as ``product_lower`` and ``product_upper``.
    """
    rho = _as_density(rho)
    k = params.K_cl
    j = j_m(rho, params)
    jt = j_tilde_m(rho, params)
    classical = k * rho ** (4.0 / 3.0)
    flux = dj_drho(rho, params) * rho
    return {
        "sandwich_lower": j - classical,
        "sandwich_upper": classical + params.m * rho - j,
        "moment_23": classical + 9.0 * params.m ** 2 / (16.0 * k) * rho ** (2.0 / 3.0) - j,
        "bracket_lower": flux - j,
        "bracket_upper": 4.0 / 3.0 * j - flux,
        "product": j * jt - 9.0 / 8.0 * rho ** 2,
        "product_lower": j * jt - rho ** 2,
        "product_upper": 9.0 / 8.0 * rho ** 2 - j * jt,
    }
