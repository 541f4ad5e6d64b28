"""
The critical profile and the sharp constant
===========================================

The index-3 Lane-Emden profile Q fixes everything that happens near the
critical coupling: the sharp constant sigma_f, the critical coupling
tau_c = K_cl / sigma_f, and the moments that enter the blow-up energies.
"""

import numpy as np

from chandra import PhysicalParams, PowerLawPotential, build_Q, direct_energy, solve_theta
from chandra.grid import power_integral
from chandra.lane_emden import richardson_first_zero

# Integrate theta'' + (2/xi) theta' + theta^3 = 0 from the regular series.
sol = solve_theta()
print(f"first zero xi1          = {sol.xi1:.13f}")

# An independent check: fixed-step RK4 at three step sizes, extrapolated.
zero, order = richardson_first_zero()
print(f"fixed-step extrapolated = {zero:.13f}  (observed order {order:.2f})")

# Rescale theta^3 into Q with unit mass and unit direct energy.
profile = build_Q(sol)
Q = profile.Q
print(f"\nmass of Q               = {Q.mass:.12f}")
print(f"direct energy D(Q,Q)    = {direct_energy(Q):.12f}")
print(f"sigma_f * int Q^(4/3)   = {profile.sigma_f * power_integral(Q, 4 / 3):.12f}")
print(f"support radius          = {profile.support_radius:.12f}")

# The sharp constant, and the coupling at which the functional loses its floor.
params = PhysicalParams(q=2, m=1.0)
print(f"\nsigma_f                 = {profile.sigma_f:.12f}")
print(f"K_cl                    = {params.K_cl:.12f}")
print(f"tau_c                   = {profile.tau_c(params):.12f}")

# Moments that set the prefactors of the collapse laws.
well = PowerLawPotential(z=1.0, s=0.5)
print(f"\nint Q^(2/3)             = {profile.int_q23:.10f}")
print(f"int Q / |x|^(1/2)       = {profile.moment(0.5):.10f}")
print(f"free prefactor          = {profile.free_energy_prefactor(params):.10f}")
print(f"well prefactor          = {profile.potential_energy_prefactor(well):.10f}")

# Q solves its own mean-field equation: (4/3) sigma_f Q^(1/3) = Phi_Q - 2/3 on
# the support, and the residual is nonnegative outside.
res = profile.le_residual()
on = Q.values > 0
print(f"\nmax residual on support = {np.max(np.abs(res[on])):.2e}")
print(f"virial combination      = {profile.virial():.2e}")
