import numpy as np
import pytest

from chandra.asymptotics import (FitDomainError, SweepRecord, SweepSpec, default_ladder, direct_term_scaling,
                                 fit_exponent, instability_probe, probe_slope, profile_distance, run_sweep,
                                 sweep_fits)
from chandra.grid import RadialDensity, RadialGrid
from chandra.minimizer import SolveConfig, minimize
from chandra.potential import PowerLawPotential


def synthetic(dtaus, prefactor, exponent, converged=True):
    return [SweepRecord(0.0, d, np.sqrt(d), prefactor * d ** exponent, prefactor * d ** exponent, 0.0,
                        0.0, 0.0, prefactor * d ** exponent, converged) for d in dtaus]


@pytest.fixture(scope="module")
def tc_value(profile, params):
    return profile.tau_c(params)


@pytest.fixture(scope="module")
def free_sweep(profile):
    return run_sweep(SweepSpec("free"), profile)


@pytest.fixture(scope="module")
def well_sweep(profile):
    return run_sweep(SweepSpec("potential", potential=PowerLawPotential(1.0, 0.5)), profile)


def test_spec_validation():
    with pytest.raises(ValueError):
        SweepSpec("orbit")
    with pytest.raises(ValueError):
        SweepSpec("free", dtau=(1e-2, 1e-1))
    with pytest.raises(ValueError):
        SweepSpec("free", dtau=(1e-1, -1e-2))
    with pytest.raises(ValueError):
        SweepSpec("free", potential=PowerLawPotential())
    assert SweepSpec("potential").potential == PowerLawPotential(1.0, 0.5)
    assert len(SweepSpec("free").dtau) == 9
    assert len(SweepSpec("potential").dtau) == 7
    assert default_ladder("potential")[-1] == pytest.approx(10 ** -2.5)


def test_exact_power_law_fit():
    fit = fit_exponent(synthetic(np.geomspace(1e-1, 1e-3, 6), 3.0, 0.5), "E")
    assert fit["exponent"] == pytest.approx(0.5, abs=1e-12)
    assert fit["prefactor"] == pytest.approx(3.0, rel=1e-12)
    assert fit["r_squared"] == pytest.approx(1.0, abs=1e-12)
    neg = fit_exponent(synthetic(np.geomspace(1e-1, 1e-3, 6), -2.0, -1.0), "E")
    assert neg["prefactor"] == pytest.approx(-2.0, rel=1e-12)
    assert fit_exponent(synthetic(np.geomspace(1e-1, 1e-3, 6), -2.0, -1.0), "|E|")["prefactor"] > 0


def test_fit_rejects_bad_windows():
    recs = synthetic(np.geomspace(1e-1, 1e-3, 5), 1.0, 0.5)
    with pytest.raises(FitDomainError):
        fit_exponent(recs[:3], "E")
    flipped = recs[:4] + synthetic([1e-3], -1.0, 0.5)
    with pytest.raises(FitDomainError):
        fit_exponent(flipped, "E")
    with pytest.raises(ValueError):
        fit_exponent(recs, "mu")
    # non-converged records never enter a fit
    failed = recs[:3] + synthetic([1e-3, 5e-4], 1.0, 0.5, converged=False)
    with pytest.raises(FitDomainError):
        fit_exponent(failed, "E")


def test_direct_term_bracket_on_exact_data():
    recs = synthetic(np.geomspace(1e-1, 1e-3, 6), 0.7, -0.5)
    out = direct_term_scaling(recs, "free")
    assert out["exponent"] == pytest.approx(-0.5, abs=1e-12)
    assert out["K1"] == pytest.approx(0.7, rel=1e-12)
    assert out["K2"] == pytest.approx(0.7, rel=1e-12)


def test_profile_distance_self_comparison(profile):
    grid = RadialGrid.graded(2048, 1.0)
    eps, lam = 0.05, 0.6
    k = lam / eps
    rho = RadialDensity(grid, k ** 3 * profile(k * grid.nodes))
    d = profile_distance(rho, profile, eps, lam, fit_lambda=True)
    assert d["L1"] <= 1e-6 and d["L43"] <= 1e-6
    assert d["lambda_fit"] == pytest.approx(lam, rel=1e-5)


def test_profile_distance_refuses_unconverged(params, tc_value, profile):
    res = minimize(0.9 * tc_value, params, config=SolveConfig(max_iter=2))
    with pytest.raises(ValueError):
        profile_distance(res, profile, 0.1, 0.5)


def test_free_sweep_shape(free_sweep):
    assert free_sweep.usable
    energies = [r.E for r in free_sweep]
    assert all(e > 0 for e in energies)
    assert np.all(np.diff(energies) < 0)
    l1 = [r.L1_dist for r in free_sweep]
    assert l1[0] >= 2 * l1[-1]


def test_well_sweep_shape(well_sweep):
    energies = [r.E for r in well_sweep]
    assert all(e < 0 for e in energies)
    assert np.all(np.diff(energies) < 0)


def test_free_direct_term_bracket(free_sweep):
    # eps D stays between two constants over one decade of eps
    window = [r for r in free_sweep if 1e-3 <= r.dtau <= 1e-1 and r.eps >= 0.1 * free_sweep[0].eps]
    out = direct_term_scaling(window, "free")
    assert out["K2"] / out["K1"] < 1.5


def test_free_prefactor_consistency(free_sweep, profile, params):
    fits = sweep_fits(free_sweep, profile)
    assert fits["E"]["prefactor"] == pytest.approx(2 * profile.lambda_inf(params), rel=0.05)
    assert fits["E"]["pinned_rel_deviation"] == pytest.approx(0.0, abs=0.01)


def test_well_fitted_lambda(well_sweep, profile):
    fits = sweep_fits(well_sweep, profile)
    assert abs(fits["profile"]["lambda_rel_deviation"]) <= 0.05
    assert fits["length"]["exponent"] == pytest.approx(2.0, abs=0.05)


def test_single_point_sweep_matches_minimize(params, tc_value, profile):
    dtau = 0.1 * tc_value
    sweep = run_sweep(SweepSpec("free", dtau=(dtau,)), profile)
    res = minimize(tc_value - dtau, params, profile=profile)
    assert sweep[0].E == res.energy.total
    assert np.array_equal(sweep.results[0].rho.values, res.rho.values)


def test_warm_and_cold_sweeps_agree(profile):
    ladder = (1e-1, 3e-2, 1e-2)
    warm = run_sweep(SweepSpec("free", dtau=ladder), profile)
    cold = run_sweep(SweepSpec("free", dtau=ladder, warm_start=False), profile)
    for a, b in zip(warm, cold):
        assert a.E == pytest.approx(b.E, rel=1e-8)


def test_unusable_sweep_is_flagged(profile):
    spec = SweepSpec("free", dtau=(1e-1, 1e-2, 1e-3), config=SolveConfig(max_iter=2))
    sweep = run_sweep(spec, profile)
    assert not sweep.usable
    assert not any(r.converged for r in sweep)
    assert np.isnan(sweep[0].L1_dist)


def test_probe_supercritical_slope(params, tc_value, profile):
    ells = np.geomspace(1, 1e3, 13)
    e = instability_probe(1.05 * tc_value, ells, params, profile=profile)
    assert probe_slope(ells, e) == pytest.approx(-0.05 * params.K_cl * profile.int_q43, rel=0.02)
    assert np.all(np.diff(e[-6:]) < 0)


def test_probe_critical_limit(params, tc_value, profile):
    ells = np.geomspace(1, 1e3, 13)
    e = instability_probe(tc_value, ells, params, profile=profile)
    limit = 9 * params.m ** 2 / (16 * params.K_cl) * profile.int_q23
    assert ells[-1] * e[-1] == pytest.approx(limit, rel=0.02)
    assert np.all(e > 0) and np.all(np.diff(e[-6:]) < 0)


def test_probe_critical_with_potentials(params, tc_value, profile):
    ells = np.geomspace(1, 1e4, 9)
    e = instability_probe(tc_value, ells, params, PowerLawPotential(1.0, 0.5), profile)
    assert np.all(np.diff(e[-4:]) < 0) and e[-1] < -10

    def bounded(r):
        return -1.0 / (1.0 + r)

    e = instability_probe(tc_value, ells, params, bounded, profile)
    assert e[-1] == pytest.approx(-1.0, abs=1e-2)


def test_probe_refuses_subcritical(params, tc_value):
    with pytest.raises(ValueError):
        instability_probe(0.9 * tc_value, [1.0, 2.0], params)
    with pytest.raises(ValueError):
        instability_probe(tc_value, [2.0, 1.0], params)
