"""
Minimizing below the critical coupling
======================================

For tau < tau_c the functional has a compactly supported minimizer. Its
Euler-Lagrange equation reads sqrt(eta^2 + m^2) = tau Phi - V + mu on the
support, and the solver iterates the map that inverts this relation.
"""

import numpy as np

from chandra import PhysicalParams, PowerLawPotential, default_profile, minimize
from chandra.coulomb import direct_energy
from chandra.kinetic import dj_drho
from chandra.potential import potential_energy

params = PhysicalParams(q=2, m=1.0)
profile = default_profile()
tc = profile.tau_c(params)

res = minimize(0.9 * tc, params, profile=profile)
print("tau / tau_c      = 0.9")
print(f"converged        = {res.converged} after {res.iterations} iterations")
print(f"energy           = {res.energy.total:.12f}")
print(f"  kinetic        = {res.energy.kinetic:.12f}")
print(f"  direct         = {res.energy.direct:.12f}")
print(f"chemical pot. mu = {res.mu:.12f}")
print(f"support radius   = {res.support_radius:.6f}")
print(f"EL residual      = {res.residual.on_support:.2e} on, {res.residual.off_support:.2e} off")

# Multiply the EL equation by rho and integrate: mu = int j' rho - 2 tau D + int V rho.
rho = res.rho
mu = rho.grid.integrate(dj_drho(rho.values, params) * rho.values) - 2 * res.tau * direct_energy(rho)
print(f"mu from identity = {mu:.12f}")

# Energy grows as the coupling weakens, and mu stays below the rest mass m.
print("\ntau/tau_c    energy          mu")
for frac in (0.3, 0.5, 0.7, 0.9, 0.99):
    r = minimize(frac * tc, params, profile=profile)
    print(f"{frac:9.2f}  {r.energy.total:14.10f}  {r.mu:12.8f}")

# An attractive well -z/|x|^s pulls the energy below zero.
well = PowerLawPotential(z=1.0, s=0.5)
r = minimize(0.9 * tc, params, well, profile=profile)
print(f"\nwith the well: energy {r.energy.total:.10f}, external part {r.energy.external:.10f}")
print(f"int V rho check  = {potential_energy(r.rho, well):.10f}")

# Halving the mass is the same as rescaling the coupling by 2^(-2/3).
half = minimize(0.5 * tc, params, target_mass=0.5, profile=profile).energy.total
unit = minimize(0.5 ** (2 / 3) * 0.5 * tc, params, profile=profile).energy.total
print(f"\nE(mass 1/2) / (E(unit mass, rescaled tau) / 2) - 1 = {half / (0.5 * unit) - 1:.1e}")
print(f"peak density at 0.9 tau_c = {np.max(rho.values):.6f}")
