"""Radial solver for the Chandrasekhar functional near its critical coupling."""

from .asymptotics import (SweepRecord, SweepResult, SweepSpec, direct_term_scaling, fit_exponent,
                          instability_probe, profile_distance, run_sweep, sweep_fits)
from .coulomb import direct_energy, hls_ratio, newton_potential
from .grid import RadialDensity, RadialGrid, lp_distance, lp_norm, rescale
from .kinetic import PhysicalParams, dj_drho, j_m, j_tilde_m, kinetic_energy, kinetic_tilde
from .lane_emden import LaneEmdenProfile, build_Q, default_profile, solve_theta
from .minimizer import (MinimizerResult, SolveConfig, SolverError, SupercriticalError, el_update,
                        energy, minimize, solve_mu, verify_el_residual)
from .potential import PowerLawPotential, potential_energy

__version__ = "0.1.0"
