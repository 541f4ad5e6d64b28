"""Mass-constrained minimisation of the Chandrasekhar functional.

The minimiser satisfies ``sqrt(eta^2 + m^2) = tau Phi_rho - V + mu`` on its
support.  Inverting the kinetic derivative gives the self-consistent map

    rho -> (q / 6 pi^2) [(tau Phi_rho - V + mu)^2 - m^2]_+^{3/2},

with ``mu`` fixed by the mass constraint.  The map is iterated with
Anderson (Pulay) acceleration or plain damped mixing.

Solves run in blow-up variables: lengths are measured in a unit ``L``
chosen from the trial-state optimum ``ell^3 Q(ell x)`` so that the support
always covers a fixed fraction of the grid.  In those units the problem is
the same functional with ``m -> m L`` and ``z -> z L^{1-s}``; energies and
``mu`` are divided by ``L`` on the way back.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, replace

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .coulomb import direct_energy, newton_potential
from .grid import RadialDensity, RadialGrid, rescale
from .kinetic import PhysicalParams, density_from_level, dj_drho, kinetic_energy
from .lane_emden import LaneEmdenProfile, default_profile
from .potential import PowerLawPotential, potential_energy

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """The solver could not produce a result (bracket failure, bad domain)."""


class SupercriticalError(ValueError):
    """Raised for ``tau >= tau_c``, where the infimum has no minimiser."""


@dataclass(frozen=True)
class SolveConfig:
    """Knobs of the self-consistent iteration."""

    beta: float = 0.5
    tol: float = 1e-11
    max_iter: int = 4000
    mixing: str = "anderson"
    history: int = 8
    mu_xtol: float = 1e-15
    max_bracket_expansions: int = 200
    rescale: bool = True
    grid_n: int = 2048
    r_max: float = 20.0
    support_fraction: float = 0.25
    max_domain_retries: int = 4

    def __post_init__(self):
        if not 0 < self.beta <= 1:
            raise ValueError("damping beta must lie in (0, 1]")
        if not (self.tol > 0 and self.mu_xtol > 0):
            raise ValueError("tolerances must be positive")
        if self.mixing not in ("anderson", "linear"):
            raise ValueError(f"unknown mixing scheme {self.mixing!r}")
        if not 0 < self.support_fraction < 1:
            raise ValueError("support_fraction must lie in (0, 1)")

    def grid(self) -> RadialGrid:
        return RadialGrid.graded(self.grid_n, self.r_max)


@dataclass(frozen=True)
class EnergyBreakdown:
    kinetic: float
    direct: float
    external: float
    total: float

    def to_dict(self) -> dict:
        return asdict(self)

    def scaled(self, factor: float) -> EnergyBreakdown:
        return EnergyBreakdown(*(factor * v for v in (self.kinetic, self.direct, self.external, self.total)))


@dataclass(frozen=True)
class ELResidual:
    """Sup of ``|sqrt(eta^2+m^2) - tau Phi + V - mu|`` on the support and the
    most negative value of the same expression off it (0 if none)."""

    on_support: float
    off_support: float


@dataclass(frozen=True, eq=False)
class MinimizerResult:
    rho: RadialDensity
    mu: float
    energy: EnergyBreakdown
    residual: ELResidual
    iterations: int
    converged: bool
    support_radius: float
    tau: float
    params: PhysicalParams
    potential: PowerLawPotential | None
    target_mass: float
    scale: float
    solver_rho: RadialDensity
    initial_energy: float
    message: str = ""

    @property
    def tolerance_scale(self) -> float:
        return max(self.params.m, abs(self.mu))


# -- energy and the Euler-Lagrange map ----------------------------------------


def _potential_nodes(grid: RadialGrid, pot: PowerLawPotential | None) -> np.ndarray:
    return np.zeros(grid.n) if pot is None else pot.on_nodes(grid.nodes)


def energy(rho: RadialDensity, tau: float, params: PhysicalParams,
           pot: PowerLawPotential | None = None) -> EnergyBreakdown:
    """Kinetic, direct and external parts; ``total = kinetic - tau D + external``."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    kin = kinetic_energy(rho, params)
    d = direct_energy(rho)
    ext = potential_energy(rho, pot)
    return EnergyBreakdown(kin, d, ext, kin - tau * d + ext)


def _level(rho: RadialDensity, tau: float, pot: PowerLawPotential | None) -> np.ndarray:
    return tau * newton_potential(rho) - _potential_nodes(rho.grid, pot)


def el_update(rho: RadialDensity, mu: float, tau: float, params: PhysicalParams,
              pot: PowerLawPotential | None = None) -> RadialDensity:
    """One application of the self-consistent map at fixed ``mu``."""
    return RadialDensity(rho.grid, density_from_level(_level(rho, tau, pot) + mu, params))


def _mu_for_level(level: np.ndarray, grid: RadialGrid, params: PhysicalParams, target: float,
                  config: SolveConfig, phi0: float) -> float:
    m = params.m
    weights = grid.weights

    def excess(mu):
        return weights @ density_from_level(level + mu, params) - target

    lo, hi = -phi0 + m - 1.0, m + phi0 + 1.0
    step = 1.0 + phi0
    for _ in range(config.max_bracket_expansions):
        if excess(lo) < 0:
            break
        lo -= step
        step *= 2
    else:
        raise SolverError("mu bracket expansion failed (lower end)")
    step = 1.0 + phi0
    for _ in range(config.max_bracket_expansions):
        if excess(hi) > 0:
            break
        hi += step
        step *= 2
    else:
        raise SolverError("mu bracket expansion failed (upper end)")
    # mass(mu) vanishes identically below m - max(level); tighten the bracket
    lo = max(lo, m - float(level.max()))
    scale = max(abs(lo), abs(hi), m)
    return brentq(excess, lo, hi, xtol=config.mu_xtol * scale, rtol=4 * np.finfo(float).eps,
                  maxiter=500)


def solve_mu(rho: RadialDensity, tau: float, params: PhysicalParams,
             pot: PowerLawPotential | None = None, target_mass: float = 1.0,
             config: SolveConfig | None = None) -> float:
    """Chemical potential making ``el_update(rho, mu)`` carry ``target_mass``."""
    if not target_mass > 0:
        raise ValueError("target_mass must be positive")
    config = config or SolveConfig()
    level = _level(rho, tau, pot)
    return _mu_for_level(level, rho.grid, params, target_mass, config, tau * float(newton_potential(rho)[0]))


def el_expression(rho: RadialDensity, mu: float, tau: float, params: PhysicalParams,
                  pot: PowerLawPotential | None = None) -> np.ndarray:
    """``sqrt(eta^2 + m^2) - tau Phi + V - mu`` at the nodes."""
    return dj_drho(rho.values, params) - _level(rho, tau, pot) - mu


def _residual(rho, mu, tau, params, pot) -> ELResidual:
    expr = el_expression(rho, mu, tau, params, pot)
    on = rho.values > 0
    on_support = float(np.max(np.abs(expr[on]), initial=0.0))
    off_support = float(min(np.min(expr[~on], initial=0.0), 0.0))
    return ELResidual(on_support, off_support)


def verify_el_residual(result: MinimizerResult, tau: float | None = None,
                       params: PhysicalParams | None = None,
                       pot: PowerLawPotential | None = None) -> ELResidual:
    """Euler-Lagrange residuals of ``result`` (its own ``tau``/params by default)."""
    tau = result.tau if tau is None else tau
    params = result.params if params is None else params
    pot = result.potential if pot is None else pot
    return _residual(result.rho, result.mu, tau, params, pot)


# -- initial guess and length unit -------------------------------------------


def trial_scale(profile: LaneEmdenProfile, tau: float, params: PhysicalParams,
                pot: PowerLawPotential | None = None, mass: float = 1.0) -> float:
    """Dilation ``ell`` minimising the upper bound on ``E(mass ell^3 Q(ell x))``.

    Uses ``j_m <= K_cl rho^{4/3} + (9/16) m^2 K_cl^{-1} rho^{2/3}``.
    """
    tc = profile.tau_c(params)
    linear = mass ** (4.0 / 3.0) * tc - mass ** 2 * tau
    if linear <= 0:
        raise SupercriticalError("tau at or above the critical value for this mass")
    inverse = 9.0 * params.m ** 2 / (16.0 * params.K_cl) * mass ** (2.0 / 3.0) * profile.int_q23
    if inverse <= 0:
        inverse = 1e-300
    ell0 = np.sqrt(inverse / linear)
    if pot is None:
        return float(ell0)
    well = pot.z * mass * profile.moment(pot.s)
    # the well alone balances the linear term at (s well / linear)^{1/(1-s)}
    ell1 = (pot.s * well / linear) ** (1.0 / (1.0 - pot.s))

    def bound(log_ell):
        ell = np.exp(log_ell)
        return linear * ell + inverse / ell - well * ell ** pot.s

    lo, hi = np.log(min(ell0, ell1)) - 3.0, np.log(max(ell0, ell1)) + 3.0
    res = minimize_scalar(bound, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
    return float(np.exp(res.x))


def length_unit(profile: LaneEmdenProfile, tau: float, params: PhysicalParams,
                pot: PowerLawPotential | None, mass: float, config: SolveConfig) -> float:
    """Solver length unit placing the trial support at ``support_fraction * r_max``."""
    if not config.rescale:
        return 1.0
    ell = trial_scale(profile, tau, params, pot, mass)
    return profile.support_radius / (ell * config.support_fraction * config.r_max)


# -- the self-consistent iteration -------------------------------------------


@dataclass
class _Scf:
    values: np.ndarray
    mu: float
    iterations: int
    converged: bool
    error: float


def _normalise(values: np.ndarray, grid: RadialGrid, target: float) -> np.ndarray:
    values = np.maximum(values, 0.0)
    mass = grid.weights @ values
    if not mass > 0:
        raise SolverError("iterate lost all its mass")
    return values * (target / mass)


def _iterate(grid: RadialGrid, tau: float, params: PhysicalParams, pot: PowerLawPotential | None,
             target: float, start: np.ndarray, config: SolveConfig) -> _Scf:
    vpot = _potential_nodes(grid, pot)
    w = grid.weights
    x = _normalise(start, grid, target)
    xs: list[np.ndarray] = []
    fs: list[np.ndarray] = []
    beta = config.beta
    best = np.inf
    energies: list[float] = []
    err = np.inf
    mu = params.m
    for it in range(1, config.max_iter + 1):
        rho = RadialDensity(grid, x)
        phi = newton_potential(rho)
        level = tau * phi - vpot
        mu = _mu_for_level(level, grid, params, target, config, tau * float(phi[0]))
        gx = density_from_level(level + mu, params)
        f = gx - x
        err = float(np.max(np.abs(f)) / np.max(gx))
        if err <= config.tol:
            return _Scf(gx, mu, it, True, err)

        if config.mixing == "linear":
            e = energy(rho, tau, params, pot).total
            energies.append(e)
            # halve the damping when the energy has risen for 5 straight steps
            if len(energies) > 5 and all(np.diff(energies[-6:]) > 0):
                beta = max(beta / 2, 1e-3)
                energies.clear()
            x = _normalise(x + beta * f, grid, target)
            continue

        if err > 1e4 * best:
            xs.clear()
            fs.clear()
        best = min(best, err)
        xs.append(x)
        fs.append(f)
        if len(xs) > config.history + 1:
            xs.pop(0)
            fs.pop(0)
        x_new = x + beta * f
        if len(xs) > 1:
            dx = np.diff(np.array(xs), axis=0)
            df = np.diff(np.array(fs), axis=0)
            sw = np.sqrt(w)
            a = (df * sw).T
            gamma, *_ = np.linalg.lstsq(a, f * sw, rcond=1e-12)
            x_new = x_new - (dx + beta * df).T @ gamma
        x = _normalise(x_new, grid, target)
    return _Scf(x, mu, config.max_iter, False, err)


def minimize(tau: float, params: PhysicalParams, pot: PowerLawPotential | None = None,
             target_mass: float = 1.0, config: SolveConfig | None = None,
             profile: LaneEmdenProfile | None = None,
             initial: MinimizerResult | RadialDensity | None = None) -> MinimizerResult:
    """Minimise the energy at fixed mass for subcritical ``tau``.

    The default start is the trial state ``ell^3 Q(ell x)`` at the dilation
    minimising the energy bound; ``initial`` warm-starts from a previous
    result or any physical-units density.  A non-converged solve is returned
    with ``converged=False`` and a diagnostic message.
    """
    config = config or SolveConfig()
    profile = profile or default_profile()
    if params.m <= 0:
        raise ValueError("the minimiser needs m > 0")
    if target_mass < 0:
        raise ValueError("target_mass must be non-negative")
    tc = profile.tau_c(params)
    if not tau > 0:
        raise ValueError("tau must be positive")
    if target_mass > 0 and target_mass ** (2.0 / 3.0) * tau >= tc:
        raise SupercriticalError(
            f"tau = {tau:.6g} is not below tau_c = {tc:.6g}: the energy is unbounded below "
            "(tau > tau_c) or equals inf V with no minimizer (tau = tau_c)")

    base = config.grid()
    if target_mass == 0:
        zero = RadialDensity.zeros(base)
        e0 = EnergyBreakdown(0.0, 0.0, 0.0, 0.0)
        return MinimizerResult(zero, params.m, e0, ELResidual(0.0, 0.0), 0, True, 0.0, tau, params,
                               pot, 0.0, 1.0, zero, 0.0, "zero mass")

    unit = length_unit(profile, tau, params, pot, target_mass, config)
    for attempt in range(config.max_domain_retries + 1):
        p_l = params.with_mass(params.m * unit)
        pot_l = None if pot is None else pot.scaled(unit)
        start = _initial_values(base, unit, profile, tau, params, pot, target_mass, config, initial)
        e_start = energy(RadialDensity(base, _normalise(start, base, target_mass)), tau, p_l, pot_l).total
        scf = _iterate(base, tau, p_l, pot_l, target_mass, start, config)
        w = RadialDensity(base, scf.values)
        if w.support_index < base.n - 2 and w.support_radius <= 0.9 * base.r_max:
            break
        log.info("support reached %.3g of r_max; enlarging the length unit", w.support_radius / base.r_max)
        if attempt == config.max_domain_retries:
            raise SolverError("domain too small: the density support touches r_max")
        unit *= 2.0
        initial = None

    rho = RadialDensity(base.scaled(unit), scf.values / unit ** 3)
    mu = scf.mu / unit
    e = energy(w, tau, p_l, pot_l).scaled(1.0 / unit)
    residual = _residual(rho, mu, tau, params, pot)
    msg = "converged" if scf.converged else (
        f"not converged after {scf.iterations} iterations (update {scf.error:.3e})")
    return MinimizerResult(rho, mu, e, residual, scf.iterations, scf.converged,
                           _support_edge(rho, mu, tau, params, pot), tau, params, pot, target_mass,
                           unit, w, e_start / unit, msg)


def _initial_values(base, unit, profile, tau, params, pot, mass, config, initial) -> np.ndarray:
    if isinstance(initial, MinimizerResult):
        initial = initial.rho
    if isinstance(initial, RadialDensity):
        return rescale(initial, unit, base).values
    if config.rescale:
        ell = profile.support_radius / (config.support_fraction * config.r_max)
    else:
        ell = trial_scale(profile, tau, params, pot, mass)
    return profile.dilated(base, ell, mass).values


def _support_edge(rho, mu, tau, params, pot) -> float:
    """Radius where ``tau Phi - V + mu`` crosses ``m``, located inside the last cell."""
    i = rho.support_index
    if i < 0:
        return 0.0
    if i >= rho.grid.n - 1:
        return rho.grid.r_max
    g = _level(rho, tau, pot) + mu - params.m
    r = rho.r
    g0, g1 = g[i], g[i + 1]
    if g0 > 0 >= g1:
        return float(r[i] + (r[i + 1] - r[i]) * g0 / (g0 - g1))
    return float(r[i])


def with_config(config: SolveConfig, **changes) -> SolveConfig:
    return replace(config, **changes)
