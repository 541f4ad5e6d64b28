"""Single-centre attractive power-law potential ``V(x) = -z / |x|^s``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import FOUR_PI, RadialDensity


@dataclass(frozen=True)
class PowerLawPotential:
    """``V(r) = -z r^{-s}`` centred at the origin, ``z > 0`` and ``0 < s < 3/4``.

    The zero potential is represented by ``None`` wherever a potential is
    optional, never by ``z = 0``.
    """

    z: float = 1.0
    s: float = 0.5

    def __post_init__(self):
        if not 0 < self.s < 0.75:
            raise ValueError(f"exponent s must lie in (0, 3/4), got {self.s}")
        if not self.z > 0:
            raise ValueError(f"strength z must be positive, got {self.z}")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            return -self.z * r ** (-self.s)

    def on_nodes(self, nodes: np.ndarray) -> np.ndarray:
        """Values at grid nodes; node 0 is sampled at half the first cell."""
        r = np.array(nodes, dtype=float)
        r[0] = 0.5 * r[1]
        return self(r)

    def scaled(self, length: float) -> PowerLawPotential:
        """Potential seen in units where lengths are divided by ``length``.

        ``length * V(length * x) = -(z length^{1-s}) |x|^{-s}``.
        """
        return PowerLawPotential(self.z * length ** (1.0 - self.s), self.s)


def potential_energy(rho: RadialDensity, pot: PowerLawPotential | None) -> float:
    """``int V rho dx = -4 pi z int rho r^{2-s} dr``; zero when ``pot`` is None."""
    if pot is None:
        return 0.0
    if not 0 < pot.s < 0.75:
        raise ValueError(f"exponent s must lie in (0, 3/4), got {pot.s}")
    return -pot.z * FOUR_PI * rho.grid.moment(rho.values, 2.0 - pot.s)


def rescaled_potential_energy(w: RadialDensity, pot: PowerLawPotential, eps: float) -> tuple[float, float]:
    """``int V(eps x) w(x) dx`` split as ``(value, eps**-s)``.

    ``value`` is the pairing itself; ``eps**s * value`` equals
    ``-z int w / |x|^s`` independent of ``eps``.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    prefactor = eps ** (-pot.s)
    return prefactor * potential_energy(w, pot), prefactor
