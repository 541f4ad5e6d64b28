"""The index-3 Lane-Emden profile ``Q`` and the sharp constant ``sigma_f``.

On its support ``Q`` satisfies ``(4/3) sigma_f Q^{1/3} = Phi_Q - 2/3``.
Taking the Laplacian of that identity turns it into the classical ODE
``theta'' + (2/xi) theta' + theta^3 = 0`` for ``Q = A theta(r/a)^3``.  We
integrate the ODE, sample ``theta^3`` on a grid, read off ``sigma_f`` as the
(scale invariant) HLS ratio of that profile and then fix the amplitude
``A`` and length ``a`` from the mass and direct-energy normalisations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .coulomb import direct_energy, hls_ratio, newton_potential
from .grid import RadialDensity, RadialGrid, power_integral
from .kinetic import PhysicalParams
from .potential import PowerLawPotential

XI_START = 1e-4
XI_LIMIT = 20.0


class LaneEmdenError(RuntimeError):
    pass


def theta_series(xi):
    """Regular expansion ``1 - xi^2/6 + xi^4/40 - 19 xi^6/5040`` about the origin."""
    x2 = np.asarray(xi, dtype=float) ** 2
    return 1.0 - x2 / 6.0 + x2 ** 2 / 40.0 - 19.0 * x2 ** 3 / 5040.0


def _theta_series_prime(xi):
    xi = np.asarray(xi, dtype=float)
    x2 = xi * xi
    return -xi / 3.0 + xi * x2 / 10.0 - 19.0 * xi * x2 * x2 / 840.0


def _rhs(xi, y):
    theta, dtheta = y
    return [dtheta, -theta ** 3 - 2.0 * dtheta / xi]


@dataclass(frozen=True, eq=False)
class LaneEmdenSolution:
    """``theta`` on ``[0, xi1]`` with its first zero ``xi1`` and slope there."""

    xi: np.ndarray
    theta: np.ndarray
    xi1: float
    dtheta1: float
    _dense: object = field(repr=False)

    def __call__(self, xi):
        """``theta(xi)`` for ``0 <= xi <= xi1``, clipped to 0 beyond the zero."""
        xi = np.asarray(xi, dtype=float)
        out = np.zeros_like(xi)
        inner = xi < XI_START
        out[inner] = theta_series(xi[inner])
        mid = (~inner) & (xi < self.xi1)
        if np.any(mid):
            out[mid] = self._dense(xi[mid])[0]
        return np.maximum(out, 0.0)

    @property
    def surface_mass(self) -> float:
        """``-xi1^2 theta'(xi1)`` (equals ``int_0^xi1 theta^3 xi^2 dxi``)."""
        return -self.xi1 ** 2 * self.dtheta1


def solve_theta(tolerance: float = 1e-12) -> LaneEmdenSolution:
    """Integrate the index-3 Lane-Emden equation out to its first zero."""
    if not tolerance > 0:
        raise ValueError("tolerance must be positive")

    def surface(xi, y):
        return y[0]

    surface.terminal = True
    surface.direction = -1
    y0 = [float(theta_series(XI_START)), float(_theta_series_prime(XI_START))]
    sol = solve_ivp(_rhs, (XI_START, XI_LIMIT), y0, method="DOP853", rtol=1e-13,
                    atol=1e-15, dense_output=True, events=surface)
    if sol.status != 1 or not sol.t_events[0].size:
        raise LaneEmdenError(f"no sign change of theta before xi = {XI_LIMIT}")
    # the event root is located on the dense interpolant to machine precision
    xi1 = float(sol.t_events[0][0])
    theta1, dtheta1 = sol.sol(xi1)
    if abs(theta1) > tolerance:
        raise LaneEmdenError(f"|theta(xi1)| = {abs(theta1):.3e} exceeds tolerance")
    xi = np.concatenate([[0.0], sol.t[sol.t < xi1], [xi1]])
    theta = np.concatenate([[1.0], sol.y[0][sol.t < xi1], [0.0]])
    return LaneEmdenSolution(xi, theta, float(xi1), float(dtheta1), sol.sol)


def first_zero_fixed_step(h: float) -> float:
    """First zero of ``theta`` by classical RK4 with fixed step ``h``.

    Independent of :func:`solve_theta` (no adaptive stepping, no dense
    output): the zero is found by cubic Hermite interpolation on the step
    where ``theta`` changes sign.
    """
    def f(x, y):
        return np.array([y[1], -y[0] ** 3 - 2.0 * y[1] / x])

    x = h
    y = np.array([float(theta_series(h)), float(_theta_series_prime(h))])
    while x < XI_LIMIT:
        k1 = f(x, y)
        k2 = f(x + h / 2, y + h / 2 * k1)
        k3 = f(x + h / 2, y + h / 2 * k2)
        k4 = f(x + h, y + h * k3)
        y_new = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if y_new[0] <= 0:
            p0, m0, p1, m1 = y[0], y[1] * h, y_new[0], y_new[1] * h

            def hermite(t):
                t2, t3 = t * t, t * t * t
                return ((2 * t3 - 3 * t2 + 1) * p0 + (t3 - 2 * t2 + t) * m0
                        + (-2 * t3 + 3 * t2) * p1 + (t3 - t2) * m1)

            return x + h * brentq(hermite, 0.0, 1.0, xtol=1e-15)
        x, y = x + h, y_new
    raise LaneEmdenError("no sign change found")


def richardson_first_zero(h: float = 0.01, order: int = 4) -> tuple[float, float]:
    """Richardson-extrapolated RK4 zero and the observed convergence order."""
    z1, z2, z3 = (first_zero_fixed_step(h / k) for k in (1, 2, 4))
    observed = np.log2(abs(z1 - z2) / abs(z2 - z3))
    return z3 + (z3 - z2) / (2 ** order - 1), float(observed)


@dataclass(frozen=True, eq=False)
class LaneEmdenProfile:
    """The optimiser ``Q(r) = A theta(r/a)^3`` normalised by
    ``sigma_f ||Q||_{4/3}^{4/3} = ||Q||_1 = D(Q,Q) = 1``."""

    Q: RadialDensity
    solution: LaneEmdenSolution
    sigma_f: float
    amplitude: float
    length: float
    mass: float
    direct: float
    int_q43: float
    int_q23: float

    @property
    def support_radius(self) -> float:
        return self.length * self.solution.xi1

    def __call__(self, r):
        """``Q`` at arbitrary radii, from the ODE's dense output."""
        return self.amplitude * self.solution(np.asarray(r, dtype=float) / self.length) ** 3

    def dilated(self, grid: RadialGrid, lam: float, mass: float = 1.0) -> RadialDensity:
        """``mass * lam^3 Q(lam r)`` sampled on ``grid``."""
        return RadialDensity(grid, mass * lam ** 3 * self(lam * grid.nodes))

    def moment(self, s: float) -> float:
        """``int Q(x) |x|^{-s} dx`` for ``0 <= s < 3/4``."""
        if not 0 <= s < 0.75:
            raise ValueError(f"s must lie in [0, 3/4), got {s}")
        return 4.0 * np.pi * self.Q.grid.moment(self.Q.values, 2.0 - s)

    def tau_c(self, params: PhysicalParams | None = None) -> float:
        q = 2 if params is None else params.q
        return PhysicalParams(q, 1.0).K_cl / self.sigma_f

    def lambda_inf(self, params: PhysicalParams) -> float:
        """Free blow-up scale ``(3/4) m (int Q^{2/3} / K_cl)^{1/2}``."""
        return 0.75 * params.m * np.sqrt(self.int_q23 / params.K_cl)

    def lambda_s(self, pot: PowerLawPotential) -> float:
        """Blow-up scale ``(s z int Q/|x|^s)^{1/(1-s)}`` in a power-law well."""
        return (pot.s * pot.z * self.moment(pot.s)) ** (1.0 / (1.0 - pot.s))

    def free_energy_prefactor(self, params: PhysicalParams) -> float:
        """Limit of ``E / (tau_c - tau)^{1/2}`` for ``V = 0`` (equals ``2 lambda_inf``)."""
        return 1.5 * params.m * np.sqrt(self.int_q23 / params.K_cl)

    def potential_energy_prefactor(self, pot: PowerLawPotential) -> float:
        """Limit of ``E / (tau_c - tau)^{s/(s-1)}`` in a power-law well."""
        return (1.0 - 1.0 / pot.s) * self.lambda_s(pot)

    def le_residual(self) -> np.ndarray:
        """``(4/3) sigma_f Q^{1/3} - Phi_Q + 2/3`` at the grid nodes."""
        return 4.0 / 3.0 * self.sigma_f * np.cbrt(self.Q.values) - newton_potential(self.Q) + 2.0 / 3.0

    def virial(self) -> float:
        """``(2/3) sigma_f ||Q||_{4/3}^{4/3} - D(Q,Q) + (1/3) ||Q||_1`` (zero for the optimiser)."""
        return 2.0 / 3.0 * self.sigma_f * self.int_q43 - self.direct + self.mass / 3.0


def build_Q(solution: LaneEmdenSolution, n: int = 4096, extent: float = 2.0,
            tolerance: float = 1e-5) -> LaneEmdenProfile:
    """Assemble the normalised profile on a graded grid reaching ``extent * R_Q``."""
    xi_grid = RadialGrid.graded(n, extent * solution.xi1)
    shape = RadialDensity(xi_grid, solution(xi_grid.nodes) ** 3)
    sigma_f = hls_ratio(shape)
    m0 = shape.mass
    d0 = direct_energy(shape)
    # mass A a^3 m0 = 1 and direct energy A^2 a^5 d0 = 1
    length = d0 / m0 ** 2
    amplitude = 1.0 / (m0 * length ** 3)
    grid = xi_grid.scaled(length)
    Q = RadialDensity(grid, amplitude * shape.values)
    mass = Q.mass
    direct = direct_energy(Q)
    q43 = power_integral(Q, 4.0 / 3.0)
    worst = max(abs(mass - 1.0), abs(direct - 1.0), abs(sigma_f * q43 - 1.0))
    if worst > tolerance:
        raise LaneEmdenError(f"normalisation residual {worst:.2e} exceeds {tolerance:.0e}")
    return LaneEmdenProfile(Q, solution, float(sigma_f), float(amplitude), float(length),
                            mass, direct, q43, power_integral(Q, 2.0 / 3.0))


def q_moments(profile: LaneEmdenProfile, s_list=()) -> dict:
    """``int Q^{2/3}`` and ``int Q/|x|^s`` for each requested ``s``."""
    for s in s_list:
        if not 0 < s < 0.75:
            raise ValueError(f"s must lie in (0, 3/4), got {s}")
    return {"int_q23": profile.int_q23,
            "int_q_over_r_s": {float(s): profile.moment(s) for s in s_list}}


@lru_cache(maxsize=4)
def default_profile(n: int = 4096) -> LaneEmdenProfile:
    """Process-wide cached profile (construction is deterministic)."""
    return build_Q(solve_theta(), n=n)
