"""
Collapse laws as tau approaches tau_c
=====================================

Near criticality the minimizer shrinks onto a rescaled copy of Q. Without a
potential the energy vanishes like (tau_c - tau)^(1/2); inside the well
-1/|x|^(1/2) it diverges like -(tau_c - tau)^(-1). Both prefactors are
moments of Q.
"""

from chandra import PhysicalParams, PowerLawPotential, SweepSpec, default_profile, run_sweep, sweep_fits

params = PhysicalParams(q=2, m=1.0)
profile = default_profile()

for mode, pot in (("free", None), ("potential", PowerLawPotential(1.0, 0.5))):
    sweep = run_sweep(SweepSpec(mode, params=params, potential=pot), profile)
    fits = sweep_fits(sweep, profile)
    print(f"\n{mode} mode")
    print("   dtau          E              D             L1 to Q")
    for rec in sweep:
        print(f"  {rec.dtau:9.2e}  {rec.E:14.8f}  {rec.D:12.6f}  {rec.L1_dist:10.5f}")
    e = fits["E"]
    print(f"energy exponent   {e['exponent']:.4f}   (theory {e['theory_exponent']})")
    print(f"energy prefactor  {e['prefactor']:.5f}  (theory {e['theory_prefactor']:.5f}, "
          f"{e['prefactor_rel_deviation']:+.2%})")
    print(f"pinned prefactor  {e['pinned_prefactor']:.5f}  ({e['pinned_rel_deviation']:+.2%} at the smallest gap)")
    print(f"direct exponent   {fits['D']['exponent']:.4f}")
