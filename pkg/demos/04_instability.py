"""
No minimizer above tau_c
========================

Above the critical coupling the trial states l^3 Q(l x) drive the energy to
minus infinity, linearly in l. At tau_c itself the energy tends to zero from
above like (9 m^2 / 16 K_cl) int Q^(2/3) / l, so the infimum is not attained.
"""

import numpy as np

from chandra import PhysicalParams, SupercriticalError, default_profile, instability_probe, minimize
from chandra.asymptotics import probe_slope

params = PhysicalParams(q=2, m=1.0)
profile = default_profile()
tc = profile.tau_c(params)
ells = np.geomspace(1.0, 1e3, 7)

above = instability_probe(1.05 * tc, ells, params, profile=profile)
at = instability_probe(tc, ells, params, profile=profile)
print("      l      E at 1.05 tau_c     l * E at tau_c")
for ell, a, b in zip(ells, above, at):
    print(f"{ell:9.2f}  {a:16.8f}  {ell * b:16.10f}")

slope = probe_slope(ells, above)
print(f"\nslope above tau_c  {slope:.8f}   expected {-0.05 * params.K_cl * profile.int_q43:.8f}")
limit = 9 * params.m ** 2 / (16 * params.K_cl) * profile.int_q23
print(f"limit of l * E     {limit:.8f}")

# The minimizer itself refuses supercritical input.
try:
    minimize(1.05 * tc, params, profile=profile)
except SupercriticalError as err:
    print(f"\nminimize(1.05 tau_c): {err}")
