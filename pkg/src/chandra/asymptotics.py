"""Collapse sweeps as ``tau`` approaches ``tau_c`` and the supercritical probe.

Along a ladder of gaps ``dtau = tau_c - tau`` the minimiser concentrates
on the length scale ``eps = dtau^{1/2}`` (no potential) or
``eps = dtau^{1/(1-s)}`` (well ``-z/|x|^s``).  Blown up by ``eps`` it
approaches ``lam^3 Q(lam x)``, and energy and direct term follow power laws
in ``dtau`` whose exponents and prefactors are fixed by ``Q``.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.stats import linregress

from .grid import RadialDensity, lp_distance
from .kinetic import PhysicalParams, kinetic_energy
from .lane_emden import LaneEmdenProfile, default_profile
from .minimizer import MinimizerResult, SolveConfig, minimize
from .potential import PowerLawPotential

log = logging.getLogger(__name__)

MODES = ("free", "potential")
OBSERVABLES = ("E", "|E|", "D", "length")


class FitDomainError(ValueError):
    """The fit window is too short or the observable changes sign on it."""


def default_ladder(mode: str) -> np.ndarray:
    if mode == "free":
        return np.geomspace(1e-1, 1e-3, 9)
    if mode == "potential":
        return np.geomspace(1e-1, 10 ** -2.5, 7)
    raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


@dataclass(frozen=True)
class SweepSpec:
    """A ladder of gaps ``tau_c - tau`` (strictly decreasing) and how to solve it.

    ``fit_window`` is a ``(start, stop)`` slice into the ladder; by default
    the two largest gaps are left out of regressions as pre-asymptotic.
    """

    mode: str = "free"
    dtau: tuple = ()
    fit_window: tuple = (2, None)
    params: PhysicalParams = field(default_factory=PhysicalParams)
    potential: PowerLawPotential | None = None
    config: SolveConfig = field(default_factory=SolveConfig)
    warm_start: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "potential" and self.potential is None:
            object.__setattr__(self, "potential", PowerLawPotential())
        if self.mode == "free" and self.potential is not None:
            raise ValueError("free mode takes no potential")
        ladder = default_ladder(self.mode) if len(self.dtau) == 0 else np.asarray(self.dtau, dtype=float)
        if ladder.ndim != 1 or ladder.size == 0:
            raise ValueError("the dtau ladder must be a non-empty list")
        if np.any(ladder <= 0):
            raise ValueError("every tau must lie below tau_c (dtau > 0)")
        if np.any(np.diff(ladder) >= 0):
            raise ValueError("the dtau ladder must be strictly decreasing")
        object.__setattr__(self, "dtau", tuple(float(d) for d in ladder))

    def eps(self, dtau):
        """Blow-up length for a gap ``dtau``."""
        if self.mode == "free":
            return np.sqrt(dtau)
        return dtau ** (1.0 / (1.0 - self.potential.s))

    def blowup_scale(self, profile: LaneEmdenProfile) -> float:
        if self.mode == "free":
            return profile.lambda_inf(self.params)
        return profile.lambda_s(self.potential)

    def window(self) -> slice:
        return slice(*self.fit_window)


@dataclass(frozen=True)
class SweepRecord:
    tau: float
    dtau: float
    eps: float
    E: float
    D: float
    mu: float
    L1_dist: float
    L43_dist: float
    r_half: float
    converged: bool

    @classmethod
    def columns(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))

    def row(self) -> tuple:
        return tuple(getattr(self, c) for c in self.columns())


@dataclass(frozen=True, eq=False)
class SweepResult(Sequence):
    """Records of a sweep in ladder order, with the solves behind them."""

    spec: SweepSpec
    records: tuple
    results: tuple
    tau_c: float

    def __getitem__(self, i):
        return self.records[i]

    def __len__(self):
        return len(self.records)

    @property
    def usable(self) -> bool:
        """False when more than 20% of the points failed to converge."""
        failed = sum(not r.converged for r in self.records)
        return failed <= 0.2 * len(self.records)

    def windowed(self) -> list[SweepRecord]:
        return list(self.records[self.spec.window()])


# -- profile comparison ---------------------------------------------------


def _blowup_target(rho: RadialDensity, profile: LaneEmdenProfile, eps: float, lam: float) -> RadialDensity:
    # w(x) = eps^3 rho(eps x) against lam^3 Q(lam x), written in rho's coordinates
    k = lam / eps
    return RadialDensity(rho.grid, k ** 3 * profile(k * rho.r))


def _distances(rho, profile, eps, lam) -> tuple[float, float]:
    target = _blowup_target(rho, profile, eps, lam)
    l1 = lp_distance(rho, target, 1.0)
    # the L^{4/3} norm picks up eps^{3/4} under x -> eps x
    l43 = eps ** 0.75 * lp_distance(rho, target, 4.0 / 3.0)
    return l1, l43


def profile_distance(result: MinimizerResult, profile: LaneEmdenProfile, eps: float,
                     lam: float, fit_lambda: bool = False) -> dict:
    """L1 and L4/3 distances between ``eps^3 rho(eps x)`` and ``lam^3 Q(lam x)``.

    With ``fit_lambda`` the L1-optimal ``lam`` is also returned.
    """
    if isinstance(result, MinimizerResult):
        if not result.converged:
            raise ValueError("profile distances are only defined for converged solves")
        rho = result.rho
    else:
        rho = result
    if not (eps > 0 and lam > 0):
        raise ValueError("eps and lam must be positive")
    l1, l43 = _distances(rho, profile, eps, lam)
    out = {"L1": l1, "L43": l43}
    if fit_lambda:
        res = minimize_scalar(lambda t: _distances(rho, profile, eps, np.exp(t))[0],
                              bounds=(np.log(lam) - 1.0, np.log(lam) + 1.0), method="bounded",
                              options={"xatol": 1e-7})
        out["lambda_fit"] = float(np.exp(res.x))
        out["L1_fit"] = float(res.fun)
    return out


# -- sweeps -----------------------------------------------------------------


def run_sweep(spec: SweepSpec, profile: LaneEmdenProfile | None = None) -> SweepResult:
    """Solve every ladder point, warm-starting from the previous one if asked."""
    profile = profile or default_profile()
    tc = profile.tau_c(spec.params)
    lam = spec.blowup_scale(profile)
    records, results = [], []
    previous = None
    for dtau in spec.dtau:
        tau = tc - dtau
        eps = float(spec.eps(dtau))
        res = minimize(tau, spec.params, spec.potential, config=spec.config, profile=profile,
                       initial=previous if spec.warm_start else None)
        if res.converged:
            l1, l43 = _distances(res.rho, profile, eps, lam)
            previous = res
        else:
            log.warning("sweep point dtau=%.3g did not converge: %s", dtau, res.message)
            l1 = l43 = float("nan")
        records.append(SweepRecord(tau, dtau, eps, res.energy.total, res.energy.direct, res.mu,
                                   l1, l43, res.rho.mass_radius(0.5), res.converged))
        results.append(res)
    return SweepResult(spec, tuple(records), tuple(results), tc)


def _observable(record: SweepRecord, observable: str) -> float:
    if observable == "E":
        return record.E
    if observable == "|E|":
        return abs(record.E)
    if observable == "D":
        return record.D
    if observable == "length":
        return record.r_half
    raise ValueError(f"observable must be one of {OBSERVABLES}, got {observable!r}")


def fit_exponent(records: Sequence[SweepRecord], observable: str = "E") -> dict:
    """Least-squares power law ``observable ~ prefactor * dtau^exponent``.

    Only converged records are used; at least four are required and the
    observable must keep one sign.
    """
    good = [r for r in records if r.converged]
    if len(good) < 4:
        raise FitDomainError(f"need at least 4 converged records, got {len(good)}")
    y = np.array([_observable(r, observable) for r in good])
    sign = np.sign(y)
    if np.any(sign == 0) or np.any(sign != sign[0]):
        raise FitDomainError(f"observable {observable!r} changes sign (or vanishes) on the window")
    x = np.log([r.dtau for r in good])
    fit = linregress(x, np.log(np.abs(y)))
    return {"exponent": float(fit.slope), "prefactor": float(sign[0] * np.exp(fit.intercept)),
            "r_squared": float(fit.rvalue ** 2), "n_points": len(good)}


def theory_exponents(mode: str, s: float | None = None) -> dict:
    """Power of ``dtau`` for energy, direct term and length."""
    if mode == "free":
        return {"E": 0.5, "D": -0.5, "length": 0.5}
    if s is None or not 0 < s < 0.75:
        raise ValueError("potential mode needs 0 < s < 3/4")
    return {"E": s / (s - 1.0), "D": 1.0 / (s - 1.0), "length": 1.0 / (1.0 - s)}


def direct_term_scaling(records: Sequence[SweepRecord], mode: str = "free",
                        s: float | None = None) -> dict:
    """Fitted exponent of ``D`` and empirical constants ``K1 <= D dtau^{-p} <= K2``.

    ``p`` is the predicted exponent for the mode.
    """
    fit = fit_exponent(records, "D")
    p = theory_exponents(mode, s)["D"]
    good = [r for r in records if r.converged]
    scaled = np.array([r.D * r.dtau ** (-p) for r in good])
    return {"exponent": fit["exponent"], "theory_exponent": p, "r_squared": fit["r_squared"],
            "K1": float(scaled.min()), "K2": float(scaled.max())}


def sweep_fits(sweep: SweepResult, profile: LaneEmdenProfile | None = None) -> dict:
    """Energy, direct-term and length fits on the window with reference values."""
    profile = profile or default_profile()
    spec = sweep.spec
    window = sweep.windowed()
    s = None if spec.potential is None else spec.potential.s
    theory = theory_exponents(spec.mode, s)
    if spec.mode == "free":
        prefactor = profile.free_energy_prefactor(spec.params)
        lam_name = "lambda_inf"
    else:
        prefactor = profile.potential_energy_prefactor(spec.potential)
        lam_name = "lambda_s"
    lam = spec.blowup_scale(profile)
    fits = {}
    for obs in ("E", "D", "length"):
        try:
            fit = fit_exponent(window, obs)
        except FitDomainError as exc:
            fits[obs] = {"error": str(exc)}
            continue
        fit["theory_exponent"] = theory[obs]
        fit["exponent_deviation"] = fit["exponent"] - theory[obs]
        fits[obs] = fit
    if "prefactor" in fits["E"]:
        fits["E"]["theory_prefactor"] = prefactor
        fits["E"]["prefactor_rel_deviation"] = fits["E"]["prefactor"] / prefactor - 1.0
        # free regressions absorb the O(dtau) correction into the intercept;
        # E dtau^{-p} at the smallest gap isolates the leading coefficient
        last = [r for r in window if r.converged][-1]
        pinned = last.E * last.dtau ** (-theory["E"])
        fits["E"]["pinned_prefactor"] = pinned
        fits["E"]["pinned_rel_deviation"] = pinned / prefactor - 1.0
    try:
        fits["D_bracket"] = direct_term_scaling(window, spec.mode, s)
    except FitDomainError as exc:
        fits["D_bracket"] = {"error": str(exc)}
    good = [(r, res) for r, res in zip(sweep.records, sweep.results) if r.converged]
    if good:
        rec, res = good[-1]
        dist = profile_distance(res, profile, rec.eps, lam, fit_lambda=True)
        fits["profile"] = {"L1_smallest": dist["L1"], "L43_smallest": dist["L43"],
                           "L1_largest": good[0][0].L1_dist,
                           "lambda_fit": dist["lambda_fit"],
                           "lambda_rel_deviation": dist["lambda_fit"] / lam - 1.0}
    fits["reference"] = {lam_name: lam, "tau_c": sweep.tau_c, "sigma_f": profile.sigma_f,
                         "energy_prefactor": prefactor}
    fits["mode"] = spec.mode
    fits["fit_window"] = list(spec.fit_window)
    fits["usable"] = sweep.usable
    return fits


# -- supercritical probe ----------------------------------------------------


def instability_probe(tau: float, ells, params: PhysicalParams,
                      pot: PowerLawPotential | Callable | None = None,
                      profile: LaneEmdenProfile | None = None) -> np.ndarray:
    """``E(ell^3 Q(ell x))`` for each ``ell``, evaluated exactly on ``Q``'s grid.

    The kinetic term is ``ell^{-3} int j_m(ell^3 Q(y)) dy``, the direct term
    is ``ell`` and the potential term ``int V(y/ell) Q(y) dy``.  ``pot`` may
    be a :class:`PowerLawPotential` or any vectorised radial ``V(r)``.
    """
    profile = profile or default_profile()
    tc = profile.tau_c(params)
    if tau < tc * (1.0 - 1e-12):
        raise ValueError(f"tau = {tau:.6g} is below tau_c = {tc:.6g}; use minimize instead")
    ells = np.asarray(ells, dtype=float)
    if ells.ndim != 1 or np.any(ells <= 0) or np.any(np.diff(ells) <= 0):
        raise ValueError("ell values must be positive and increasing")
    Q = profile.Q
    out = np.empty(ells.size)
    for i, ell in enumerate(ells):
        kin = kinetic_energy(RadialDensity(Q.grid, ell ** 3 * Q.values), params) / ell ** 3
        if pot is None:
            ext = 0.0
        elif isinstance(pot, PowerLawPotential):
            ext = -pot.z * ell ** pot.s * profile.moment(pot.s)
        else:
            r = np.array(Q.r, dtype=float)
            r[0] = 0.5 * r[1]
            ext = Q.grid.integrate(np.asarray(pot(r / ell), dtype=float) * Q.values)
        out[i] = kin - tau * ell + ext
    return out


def probe_slope(ells, energies) -> float:
    """Slope of ``E`` against ``ell`` from the last two points."""
    ells = np.asarray(ells, dtype=float)
    energies = np.asarray(energies, dtype=float)
    return float((energies[-1] - energies[-2]) / (ells[-1] - ells[-2]))


def records_to_dicts(records: Sequence[SweepRecord]) -> list[dict]:
    return [asdict(r) for r in records]
