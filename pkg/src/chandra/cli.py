"""``chandra`` command-line entry point.

Commands: constants | lane-emden | minimize | sweep | check.

Settings come from built-in defaults, then an optional flat ``key = value``
file (``--config``), then command-line flags; later sources win.  Outputs
go to ``--out``/``--out-dir`` or, by default, ``$CHANDRA_OUT_DIR/<command>``.
Every written file is listed with its sha256 in ``manifest.json``; only the
manifest carries wall-clock data, so all other files are byte-reproducible.

Exit codes: 0 success, 2 usage, 3 non-convergence, 4 property failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import os
import sys
import time
from dataclasses import dataclass
from importlib import metadata
from pathlib import Path

import numpy as np

from .asymptotics import SweepRecord, SweepSpec, instability_probe, probe_slope, run_sweep, sweep_fits
from .coulomb import direct_energy
from .grid import RadialDensity, RadialGrid, density_to_csv
from .kinetic import PhysicalParams, bound_margins, dj_drho, kinetic_energy
from .lane_emden import default_profile, richardson_first_zero
from .minimizer import SolveConfig, SolverError, SupercriticalError, minimize
from .potential import PowerLawPotential, potential_energy

EXIT_OK, EXIT_USAGE, EXIT_NONCONVERGED, EXIT_PROPERTY = 0, 2, 3, 4

log = logging.getLogger("chandra")


class UsageError(ValueError):
    pass


# -- configuration ------------------------------------------------------------


@dataclass
class RunConfig:
    q: int = 2
    m: float = 1.0
    tau: float | None = None
    tau_frac: float | None = None
    mass: float = 1.0
    z: float | None = None
    s: float = 0.5
    grid_n: int = 2048
    r_max: float = 20.0
    beta: float = 0.5
    tol: float = 1e-11
    max_iter: int = 4000
    mixing: str = "anderson"
    mode: str = "free"
    ladder: tuple = ()
    fit_window: tuple = (2, None)
    out_dir: str | None = None

    def validate(self) -> RunConfig:
        if int(self.q) != self.q or self.q < 1:
            raise UsageError("q must be a positive integer")
        if not self.m > 0:
            raise UsageError("m must be positive")
        if self.tau is not None and self.tau_frac is not None:
            raise UsageError("give either tau or tau_frac, not both")
        if self.z is not None and not self.z > 0:
            raise UsageError("z must be positive")
        if not 0 < self.s < 0.75:
            raise UsageError("s must lie in (0, 3/4)")
        if not self.mass >= 0:
            raise UsageError("mass must be non-negative")
        if self.grid_n < 8 or not self.r_max > 0:
            raise UsageError("grid needs grid_n >= 8 and r_max > 0")
        if self.mode not in ("free", "potential"):
            raise UsageError("mode must be free or potential")
        return self

    def params(self) -> PhysicalParams:
        return PhysicalParams(int(self.q), float(self.m))

    def potential(self) -> PowerLawPotential | None:
        return None if self.z is None else PowerLawPotential(self.z, self.s)

    def solve_config(self) -> SolveConfig:
        try:
            return SolveConfig(beta=self.beta, tol=self.tol, max_iter=self.max_iter, mixing=self.mixing,
                               grid_n=self.grid_n, r_max=self.r_max)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc

    def tau_value(self, tau_c: float) -> float:
        if self.tau is not None:
            return float(self.tau)
        if self.tau_frac is not None:
            return float(self.tau_frac) * tau_c
        raise UsageError("minimize needs --tau or --tau-frac")

    def echo(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out

    def digest(self) -> str:
        """sha256 of the numerical settings (output location excluded)."""
        numeric = {k: v for k, v in self.echo().items() if k != "out_dir"}
        return hashlib.sha256(json.dumps(numeric, sort_keys=True).encode()).hexdigest()


def _parse_value(name: str, text: str):
    text = text.strip()
    if name in ("ladder",):
        return tuple(float(t) for t in text.replace(",", " ").split())
    if name == "fit_window":
        return parse_window(text)
    if text.lower() in ("none", ""):
        return None
    if name in ("q", "grid_n", "max_iter"):
        return int(text)
    if name in ("mixing", "mode", "out_dir"):
        return text
    return float(text)


def parse_window(text: str) -> tuple:
    """``"2:"``, ``"2:8"`` or ``"2,8"`` -> ``(start, stop)``."""
    parts = text.replace(",", ":").split(":")
    if len(parts) == 1:
        parts.append("")
    if len(parts) != 2:
        raise UsageError(f"bad fit window {text!r}")
    try:
        return tuple(int(p) if p.strip() else None for p in parts)
    except ValueError as exc:
        raise UsageError(f"bad fit window {text!r}") from exc


def read_config_file(path: Path) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    names = {f.name for f in dataclasses.fields(RunConfig)}
    out = {}
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (t.strip() for t in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in names:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            out[key] = _parse_value(key, value)
        except ValueError as exc:
            raise UsageError(f"{path}:{lineno}: {exc}") from exc
    return out


def build_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if getattr(args, "config", None):
        values.update(read_config_file(Path(args.config)))
    names = {f.name for f in dataclasses.fields(RunConfig)}
    for key, value in vars(args).items():
        if key in names and value is not None:
            values[key] = value
    if getattr(args, "out", None) is not None:
        values["out_dir"] = args.out
    return RunConfig(**values).validate()


# -- output helpers -----------------------------------------------------------


def code_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=True) + "\n"


class Outputs:
    """Writes files into one directory and indexes them in ``manifest.json``."""

    def __init__(self, command: str, config: RunConfig, config_file: str | None = None):
        root = config.out_dir or os.path.join(os.environ.get("CHANDRA_OUT_DIR", "chandra_out"), command)
        self.dir = Path(root)
        self.command = command
        self.config = config
        self.config_file = config_file
        self.index: dict[str, str] = {}
        self.started = time.time()

    def write(self, name: str, text: str) -> Path:
        self.dir.mkdir(parents=True, exist_ok=True)
        path = self.dir / name
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
        self.index[name] = hashlib.sha256(text.encode()).hexdigest()
        return path

    def finish(self, status: int) -> Path:
        inputs = {}
        if self.config_file:
            inputs["config_file"] = {"path": self.config_file,
                                     "sha256": hashlib.sha256(Path(self.config_file).read_bytes()).hexdigest()}
        manifest = {
            "command": self.command,
            "config": self.config.echo(),
            "config_hash": self.config.digest(),
            "code_version": code_version(),
            "inputs": inputs,
            "exit_status": status,
            "wall_clock": {"started_unix": self.started, "elapsed_s": time.time() - self.started},
            "outputs": dict(sorted(self.index.items())),
        }
        self.dir.mkdir(parents=True, exist_ok=True)
        path = self.dir / "manifest.json"
        path.write_text(_dumps(manifest))
        return path


def _provenance(config: RunConfig) -> dict:
    return {"config_hash": config.digest(), "code_version": code_version()}


# -- commands -------------------------------------------------------------------


def constants_report(config: RunConfig) -> dict:
    profile = default_profile()
    params = config.params()
    pot = PowerLawPotential(1.0 if config.z is None else config.z, config.s)
    return {
        "q": params.q, "m": params.m,
        "K_cl": params.K_cl,
        "sigma_f": profile.sigma_f,
        "tau_c": profile.tau_c(params),
        "xi1": profile.solution.xi1,
        "lambda_inf": profile.lambda_inf(params),
        "z": pot.z, "s": pot.s,
        "lambda_s": profile.lambda_s(pot),
        "int_Q_2_3": profile.int_q23,
        "int_Q_over_r_s": profile.moment(pot.s),
    }


def cmd_constants(config: RunConfig, args) -> int:
    report = constants_report(config)
    sys.stdout.write(_dumps(report))
    if config.out_dir:
        out = Outputs("constants", config, args.config)
        out.write("constants.json", _dumps(report))
        out.finish(EXIT_OK)
    return EXIT_OK


def cmd_lane_emden(config: RunConfig, args) -> int:
    profile = default_profile()
    zero, order = richardson_first_zero()
    residual = profile.le_residual()
    on = profile.Q.values > 0
    report = {
        "xi1": profile.solution.xi1,
        "xi1_fixed_step_extrapolated": zero,
        "xi1_fixed_step_order": order,
        "sigma_f": profile.sigma_f,
        "tau_c": profile.tau_c(config.params()),
        "amplitude": profile.amplitude,
        "length": profile.length,
        "support_radius": profile.support_radius,
        "mass": profile.mass,
        "direct": profile.direct,
        "sigma_f_times_int_Q_4_3": profile.sigma_f * profile.int_q43,
        "int_Q_2_3": profile.int_q23,
        "residual_on_support": float(np.max(np.abs(residual[on]))),
        "residual_off_support_min": float(np.min(residual[~on], initial=0.0)),
        "virial": profile.virial(),
    }
    sys.stdout.write(_dumps(report))
    out = Outputs("lane-emden", config, args.config)
    out.write("lane_emden.json", _dumps(report))
    out.write("Q.csv", density_to_csv(profile.Q, provenance=config.digest()))
    out.finish(EXIT_OK)
    return EXIT_OK


def result_json(result, tau_c: float, config: RunConfig) -> dict:
    return {
        "tau": result.tau,
        "tau_c": tau_c,
        "mu": result.mu,
        "energy": result.energy.to_dict(),
        "residuals": {"on_support": result.residual.on_support,
                      "off_support": result.residual.off_support},
        "iterations": result.iterations,
        "converged": result.converged,
        "support_radius": result.support_radius,
        "provenance": _provenance(config),
    }


def cmd_minimize(config: RunConfig, args) -> int:
    profile = default_profile()
    params = config.params()
    tc = profile.tau_c(params)
    tau = config.tau_value(tc)
    out = Outputs("minimize", config, args.config)
    try:
        result = minimize(tau, params, config.potential(), target_mass=config.mass,
                          config=config.solve_config(), profile=profile)
    except SupercriticalError as exc:
        print(f"error: {exc}.\nRun `chandra check` to see the instability probe.", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    payload = result_json(result, tc, config)
    out.write("result.json", _dumps(payload))
    out.write("density.csv", density_to_csv(result.rho, provenance=config.digest()))
    status = EXIT_OK if result.converged else EXIT_NONCONVERGED
    out.finish(status)
    print(f"E = {result.energy.total:.12g}  mu = {result.mu:.12g}  iterations = {result.iterations}  "
          f"{result.message}  -> {out.dir}")
    return status


SWEEP_GATES = {
    "free": {"E_exponent": 0.02, "D_exponent": 0.02, "E_prefactor": 0.05},
    "potential": {"E_exponent": 0.05, "D_exponent": 0.1, "E_prefactor": 0.05},
}
PROFILE_L1_GATE = 0.05


def sweep_gates(fits: dict) -> dict:
    gates = SWEEP_GATES[fits["mode"]]
    out = {}
    e, d = fits.get("E", {}), fits.get("D", {})
    out["usable"] = bool(fits["usable"])
    out["E_exponent"] = "exponent" in e and abs(e["exponent_deviation"]) <= gates["E_exponent"]
    out["D_exponent"] = "exponent" in d and abs(d["exponent_deviation"]) <= gates["D_exponent"]
    out["E_prefactor"] = "prefactor_rel_deviation" in e and abs(e["prefactor_rel_deviation"]) <= gates["E_prefactor"]
    prof = fits.get("profile")
    out["profile_L1"] = bool(prof) and prof["L1_smallest"] <= PROFILE_L1_GATE
    out["profile_decrease"] = bool(prof) and prof["L1_largest"] >= 2 * prof["L1_smallest"]
    return out


def sweep_csv(records) -> str:
    lines = [",".join(SweepRecord.columns())]
    for rec in records:
        cells = []
        for v in rec.row():
            if isinstance(v, bool):
                cells.append("1" if v else "0")
            else:
                cells.append(f"{v:.17g}")
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def cmd_sweep(config: RunConfig, args) -> int:
    if args.ladder is not None and len(config.ladder) == 0:
        raise UsageError("the ladder is empty")
    pot = None
    if config.mode == "potential":
        pot = PowerLawPotential(1.0 if config.z is None else config.z, config.s)
    try:
        spec = SweepSpec(config.mode, tuple(config.ladder), tuple(config.fit_window), config.params(), pot,
                         config.solve_config())
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = Outputs("sweep", config, args.config)
    sweep = run_sweep(spec)
    fits = sweep_fits(sweep)
    fits["gates"] = sweep_gates(fits)
    fits["ladder"] = list(spec.dtau)
    out.write("sweep.csv", sweep_csv(sweep.records))
    out.write("fits.json", _dumps(fits))
    if not sweep.usable:
        status = EXIT_NONCONVERGED
    elif all(fits["gates"].values()):
        status = EXIT_OK
    else:
        status = EXIT_PROPERTY
    out.finish(status)
    e = fits.get("E", {})
    print(f"{config.mode}: E exponent {e.get('exponent', float('nan')):.4f} "
          f"(theory {e.get('theory_exponent', float('nan')):.4f}), prefactor deviation "
          f"{e.get('prefactor_rel_deviation', float('nan')):+.3%}; gates {fits['gates']} -> {out.dir}")
    return status


def property_suite(config: RunConfig) -> list[tuple[str, bool, str]]:
    """Named checks of the build, each ``(name, passed, detail)``."""
    profile = default_profile()
    params = config.params()
    tc = profile.tau_c(params)
    checks = []

    def add(name, ok, detail):
        checks.append((name, bool(ok), detail))

    add("sigma_f range", 1.087 <= profile.sigma_f <= 1.097, f"sigma_f = {profile.sigma_f:.10f}")
    norm = max(abs(profile.mass - 1), abs(profile.direct - 1), abs(profile.sigma_f * profile.int_q43 - 1))
    add("Q normalisation", norm <= 1e-5, f"worst deviation {norm:.2e}")
    on = profile.Q.values > 0
    res = float(np.max(np.abs(profile.le_residual()[on])))
    add("Lane-Emden residual", res <= 1e-5, f"sup on support {res:.2e}")
    add("virial identity", abs(profile.virial()) <= 1e-8, f"{profile.virial():.2e}")

    ball = RadialDensity.from_function(RadialGrid.graded(2048, 1.0), lambda r: np.full_like(r, 3 / (4 * np.pi)))
    d = direct_energy(ball)
    add("unit ball direct energy", abs(d / 0.6 - 1) <= 1e-6, f"D = {d:.15f}")

    rho = np.logspace(-8, 1, 91)
    worst = {}
    for q in (1, 2):
        for m in np.logspace(-3, np.log10(5), 12):
            for key, margin in bound_margins(rho, PhysicalParams(q, m)).items():
                if key != "product":
                    worst[key] = min(worst.get(key, np.inf), float(np.min(margin)))
    add("kinetic bounds", all(v >= -1e-12 for v in worst.values()),
        ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))

    tau = 0.5 * tc
    cfg = config.solve_config()
    half = minimize(tau, params, target_mass=0.5, config=cfg, profile=profile)
    unit = minimize(0.5 ** (2 / 3) * tau, params, config=cfg, profile=profile)
    rel = abs(half.energy.total / (0.5 * unit.energy.total) - 1)
    add("mass scaling identity", half.converged and unit.converged and rel <= 1e-4, f"relative gap {rel:.2e}")

    sub = minimize(0.9 * tc, params, config=cfg, profile=profile)
    scale = max(params.m, abs(sub.mu))
    rho_s = sub.rho
    mu_id = (rho_s.grid.integrate(dj_drho(rho_s.values, params) * rho_s.values)
             - 2 * sub.tau * direct_energy(rho_s) + potential_energy(rho_s, None))
    ok = (sub.converged and sub.residual.on_support <= 1e-6 * scale
          and sub.residual.off_support >= -1e-6 * scale and abs(mu_id / sub.mu - 1) <= 1e-6
          and sub.support_radius < rho_s.grid.r_max)
    add("subcritical Euler-Lagrange", ok,
        f"residual {sub.residual.on_support:.2e}, identity gap {abs(mu_id / sub.mu - 1):.2e}")
    add("energy positive without potential", sub.energy.total > 0 and half.energy.total > 0,
        f"E(0.9 tau_c) = {sub.energy.total:.6g}")
    kin_ok = kinetic_energy(rho_s, params) <= rho_s.grid.integrate(dj_drho(rho_s.values, params) * rho_s.values)
    add("integrated kinetic bracket", kin_ok, "int j <= int sqrt(eta^2+m^2) rho")

    ells = np.geomspace(1.0, 1e3, 13)
    e = instability_probe(1.05 * tc, ells, params, profile=profile)
    slope = probe_slope(ells, e)
    expect = -0.05 * tc
    add("instability slope", abs(slope / expect - 1) <= 0.02 and np.all(np.diff(e[-6:]) < 0),
        f"slope {slope:.6g} vs {expect:.6g}")
    e = instability_probe(tc, ells, params, profile=profile)
    limit = 9 * params.m ** 2 / (16 * params.K_cl) * profile.int_q23
    add("critical probe limit", abs(ells[-1] * e[-1] / limit - 1) <= 0.02,
        f"ell E = {ells[-1] * e[-1]:.6g} vs {limit:.6g}")
    return checks


def cmd_check(config: RunConfig, args) -> int:
    out = Outputs("check", config, args.config)
    checks = property_suite(config)
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    failed = [name for name, ok, _ in checks if not ok]
    if config.out_dir:
        out.write("check.json", _dumps([{"name": n, "passed": ok, "detail": d} for n, ok, d in checks]))
        out.finish(EXIT_PROPERTY if failed else EXIT_OK)
    if failed:
        print("failed: " + ", ".join(failed), file=sys.stderr)
        return EXIT_PROPERTY
    return EXIT_OK


# -- argument parsing -----------------------------------------------------------


def _ladder(text: str) -> tuple:
    try:
        return tuple(float(t) for t in text.replace(",", " ").split())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad ladder {text!r}") from exc


def _window(text: str) -> tuple:
    try:
        return parse_window(text)
    except UsageError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chandra", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_flag="--out"):
        p.add_argument("--config", help="flat key = value settings file")
        p.add_argument("--q", type=int)
        p.add_argument("--m", type=float)
        p.add_argument("--z", type=float)
        p.add_argument("--s", type=float)
        p.add_argument(out_flag, dest="out", help="output directory")

    def solver(p):
        p.add_argument("--grid-n", dest="grid_n", type=int)
        p.add_argument("--rmax", dest="r_max", type=float)
        p.add_argument("--beta", type=float)
        p.add_argument("--tol", type=float)
        p.add_argument("--max-iter", dest="max_iter", type=int)
        p.add_argument("--mixing", choices=("anderson", "linear"))

    common(sub.add_parser("constants", help="K_cl, sigma_f, tau_c, xi1 and blow-up scales"))
    common(sub.add_parser("lane-emden", help="solve for Q and write its profile"))

    p = sub.add_parser("minimize", help="minimise at fixed subcritical tau")
    common(p)
    solver(p)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--tau", type=float)
    group.add_argument("--tau-frac", dest="tau_frac", type=float)
    p.add_argument("--mass", type=float)

    p = sub.add_parser("sweep", help="collapse sweep and power-law fits")
    common(p, "--out-dir")
    solver(p)
    p.add_argument("--mode", choices=("free", "potential"))
    p.add_argument("--ladder", type=_ladder, help="comma list of tau_c - tau values")
    p.add_argument("--fit-window", dest="fit_window", type=_window, help="start:stop into the ladder")

    p = sub.add_parser("check", help="run the property suite")
    common(p)
    solver(p)
    return parser


COMMANDS = {"constants": cmd_constants, "lane-emden": cmd_lane_emden, "minimize": cmd_minimize,
            "sweep": cmd_sweep, "check": cmd_check}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = build_config(args)
        return COMMANDS[args.command](config, args)
    except (UsageError, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
