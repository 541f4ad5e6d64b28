"""Radial grids, quadrature and spherically symmetric densities.

Every integral in the package is of the form ``4*pi * int f(r) r**k dr``.  The
grid stores nodes ``0 = r_0 < ... < r_{N-1} = r_max`` and integrates by
piecewise-cubic interpolation of ``f``: on each cell the cubic through a
four-node stencil is multiplied by the exact weight ``r**k`` and integrated.
The rule is therefore exact for cubic ``f`` under any power weight, and the
first cell uses Gauss-Jacobi points so that ``r**(2-s)`` is handled exactly.
"""

from __future__ import annotations

import hashlib
import io
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import roots_jacobi, roots_legendre

FOUR_PI = 4.0 * np.pi

# points per cell; exact for (cubic) x (polynomial weight of degree <= 12)
_N_GAUSS = 8


class GridError(ValueError):
    """Raised for structurally inconsistent grid/value combinations."""


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Strictly increasing radial nodes starting at ``r = 0``.

    Build one with :meth:`graded` (the default for solves) or :meth:`uniform`.
    """

    nodes: np.ndarray
    descriptor: str = "custom"
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        r = np.asarray(self.nodes, dtype=float)
        if r.ndim != 1 or r.size < 4:
            raise GridError("a radial grid needs at least 4 nodes")
        if r[0] != 0.0:
            raise GridError("the first node must be r = 0")
        if np.any(np.diff(r) <= 0):
            raise GridError("nodes must be strictly increasing")
        r.setflags(write=False)
        object.__setattr__(self, "nodes", r)

    # -- constructors -----------------------------------------------------

    @classmethod
    def graded(cls, n: int = 2048, r_max: float = 20.0, ratio: float = 1.08,
               min_fraction: float = 1e-3) -> RadialGrid:
        """Geometric cells near the origin growing into a uniform mesh.

        The first cell is ``min_fraction`` times the uniform spacing ``h``
        and each following cell is ``ratio`` times larger until ``h`` is
        reached; the remaining cells are uniform up to ``r_max``.
        """
        if n < 16:
            raise GridError("graded grids need n >= 16")
        k = int(np.ceil(np.log(1.0 / min_fraction) / np.log(ratio)))
        k = min(k, (n - 1) // 2)
        geo = ratio ** np.arange(-k, 0)  # in units of h
        h = r_max / (geo.sum() + (n - 1 - k))
        cells = np.concatenate([geo * h, np.full(n - 1 - k, h)])
        nodes = np.concatenate([[0.0], np.cumsum(cells)])
        nodes[-1] = r_max
        desc = f"graded n={n} r_max={r_max!r} ratio={ratio!r} min_fraction={min_fraction!r}"
        return cls(nodes, desc)

    @classmethod
    def uniform(cls, n: int, r_max: float) -> RadialGrid:
        return cls(np.linspace(0.0, r_max, n), f"uniform n={n} r_max={r_max!r}")

    # -- basic properties -------------------------------------------------

    @property
    def n(self) -> int:
        return self.nodes.size

    @property
    def r_max(self) -> float:
        return float(self.nodes[-1])

    def scaled(self, length: float) -> RadialGrid:
        """The same grid with every radius multiplied by ``length``."""
        if length <= 0:
            raise GridError("length scale must be positive")
        return RadialGrid(self.nodes * length, f"{self.descriptor} scaled={length!r}")

    def same_as(self, other: RadialGrid) -> bool:
        return self is other or (self.n == other.n and np.array_equal(self.nodes, other.nodes))

    # -- quadrature machinery ---------------------------------------------

    @cached_property
    def _stencils(self) -> np.ndarray:
        """Start index of the 4-node stencil used on each cell."""
        c = np.arange(self.n - 1)
        # cell 1 skips node 0 so that node 0 keeps a non-negative weight
        start = np.where(c == 0, 0, np.maximum(c - 1, 1))
        return np.minimum(start, self.n - 4)

    def cell_weights(self, power: float) -> np.ndarray:
        """Array ``W[c, j]`` with ``int_cell_c f r**power dr = sum_j W[c, j] f[s_c + j]``."""
        key = float(power)
        if key not in self._cache:
            self._cache[key] = self._build_cell_weights(key)
        return self._cache[key]

    def _build_cell_weights(self, power: float) -> np.ndarray:
        r = self.nodes
        s = self._stencils
        a, b = r[:-1], r[1:]
        h = b - a
        x, w = roots_legendre(_N_GAUSS)
        pts = a[:, None] + 0.5 * h[:, None] * (x[None, :] + 1.0)
        wts = 0.5 * h[:, None] * w[None, :] * pts ** power
        # first cell: r**power is the Jacobi weight, integrated exactly
        xj, wj = roots_jacobi(_N_GAUSS, 0.0, power)
        pts[0] = 0.5 * h[0] * (xj + 1.0)
        wts[0] = (0.5 * h[0]) ** (power + 1.0) * wj

        stencil = r[s[:, None] + np.arange(4)[None, :]]  # (cells, 4)
        W = np.empty((r.size - 1, 4))
        for j in range(4):
            basis = np.ones_like(pts)
            for k in range(4):
                if k != j:
                    basis *= (pts - stencil[:, k:k + 1]) / (stencil[:, j:j + 1] - stencil[:, k:k + 1])
            W[:, j] = np.sum(basis * wts, axis=1)
        return W

    def node_weights(self, power: float = 2.0) -> np.ndarray:
        """Per-node weights for ``int_0^r_max f r**power dr`` (no 4*pi)."""
        W = self.cell_weights(power)
        out = np.zeros(self.n)
        idx = self._stencils[:, None] + np.arange(4)[None, :]
        np.add.at(out, idx.ravel(), W.ravel())
        return out

    @cached_property
    def weights(self) -> np.ndarray:
        """Per-node weights for ``4*pi * int f r**2 dr``."""
        w = FOUR_PI * self.node_weights(2.0)
        w.setflags(write=False)
        return w

    def _check(self, f) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape != self.nodes.shape:
            raise GridError(f"expected {self.n} values, got shape {f.shape}")
        return f

    def cell_integrals(self, f, power: float) -> np.ndarray:
        f = self._check(f)
        idx = self._stencils[:, None] + np.arange(4)[None, :]
        return np.sum(self.cell_weights(power) * f[idx], axis=1)

    def cumulative(self, f, power: float = 2.0) -> np.ndarray:
        """``int_0^{r_i} f r**power dr`` at every node (no 4*pi)."""
        return np.concatenate([[0.0], np.cumsum(self.cell_integrals(f, power))])

    def moment(self, f, power: float) -> float:
        """``int_0^r_max f r**power dr`` (no 4*pi)."""
        return float(np.sum(self.cell_integrals(f, power)))

    def integrate(self, f) -> float:
        """``4*pi * int f r**2 dr``."""
        return float(self.weights @ self._check(f))


def integrate_radial(f, grid: RadialGrid) -> float:
    """``4*pi * int f(r) r**2 dr`` by the grid's quadrature rule."""
    return grid.integrate(f)


@dataclass(frozen=True, eq=False)
class RadialDensity:
    """Non-negative number density sampled on a :class:`RadialGrid`.

    The density is taken to vanish beyond ``grid.r_max``.
    """

    grid: RadialGrid
    values: np.ndarray

    #: values below this fraction of the maximum are treated as zero support
    SUPPORT_THRESHOLD = 1e-14

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.grid.nodes.shape:
            raise GridError(f"expected {self.grid.n} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("density values must be finite")
        if np.any(v < 0):
            raise ValueError("density must be non-negative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: RadialGrid, func) -> RadialDensity:
        return cls(grid, func(grid.nodes))

    @classmethod
    def zeros(cls, grid: RadialGrid) -> RadialDensity:
        return cls(grid, np.zeros(grid.n))

    @property
    def r(self) -> np.ndarray:
        return self.grid.nodes

    @cached_property
    def mass(self) -> float:
        return self.grid.integrate(self.values)

    def scaled(self, factor: float) -> RadialDensity:
        """Multiply the density by a non-negative constant."""
        return RadialDensity(self.grid, self.values * factor)

    def dilate(self, ell: float) -> RadialDensity:
        """Exact ``ell**3 rho(ell r)`` represented on the grid ``nodes / ell``."""
        return RadialDensity(self.grid.scaled(1.0 / ell), self.values * ell ** 3)

    @cached_property
    def support_index(self) -> int:
        """Index of the last node carrying density (-1 for the zero density)."""
        v = self.values
        if v.max(initial=0.0) <= 0:
            return -1
        nz = np.nonzero(v > self.SUPPORT_THRESHOLD * v.max())[0]
        return int(nz[-1])

    @property
    def support_radius(self) -> float:
        """Radius of the last support node (0 for the zero density)."""
        i = self.support_index
        return 0.0 if i < 0 else float(self.r[i])

    @property
    def compactly_supported(self) -> bool:
        """True when the density is exactly zero on the nodes past its support."""
        i = self.support_index
        if i < 0:
            return True
        return i < self.grid.n - 1 and not np.any(self.values[i + 1:])

    def mass_radius(self, fraction: float = 0.5) -> float:
        """Radius enclosing ``fraction`` of the mass (linear in the cumulative mass)."""
        cum = FOUR_PI * self.grid.cumulative(self.values, 2.0)
        target = fraction * cum[-1]
        i = int(np.searchsorted(cum, target))
        i = min(max(i, 1), self.grid.n - 1)
        r0, r1, c0, c1 = self.r[i - 1], self.r[i], cum[i - 1], cum[i]
        return float(r0 + (target - c0) * (r1 - r0) / (c1 - c0)) if c1 > c0 else float(r1)

    def interpolator(self):
        """Monotone cubic interpolant of ``rho**(1/3)``; zero beyond ``r_max``."""
        cube_root = np.cbrt(self.values)
        pchip = PchipInterpolator(self.r, cube_root, extrapolate=False)

        def evaluate(r):
            y = pchip(np.asarray(r, dtype=float))
            y = np.nan_to_num(y, nan=0.0)
            return np.maximum(y, 0.0) ** 3

        return evaluate

    def to_csv(self, provenance: str = "") -> str:
        return density_to_csv(self, provenance)


def _check_density(rho: RadialDensity) -> np.ndarray:
    v = rho.values
    if np.any(v < 0):
        raise ValueError("density must be non-negative")
    return v


def lp_norm(rho: RadialDensity, p: float) -> float:
    """``(int rho**p)**(1/p)`` for ``p >= 1``; the raw moment ``int rho**(2/3)`` for ``p = 2/3``."""
    v = _check_density(rho)
    if np.isclose(p, 2.0 / 3.0):
        return rho.grid.integrate(v ** (2.0 / 3.0))
    if p < 1:
        raise ValueError(f"unsupported exponent p={p}")
    return rho.grid.integrate(v ** p) ** (1.0 / p)


def power_integral(rho: RadialDensity, p: float) -> float:
    """``int rho**p dx`` for any ``p > 0``."""
    return rho.grid.integrate(_check_density(rho) ** p)


def rescale(rho: RadialDensity, ell: float, target: RadialGrid | None = None) -> RadialDensity:
    """Sample ``ell**3 rho(ell r)`` on ``target`` (default: the density's grid)."""
    if not ell > 0:
        raise ValueError(f"scale must be positive, got {ell}")
    target = rho.grid if target is None else target
    f = rho.interpolator()
    return RadialDensity(target, ell ** 3 * f(ell * target.nodes))


def _common(rho1: RadialDensity, rho2: RadialDensity) -> tuple[RadialGrid, np.ndarray, np.ndarray]:
    if rho1.grid.same_as(rho2.grid):
        return rho1.grid, rho1.values, rho2.values
    return rho1.grid, rho1.values, rho2.interpolator()(rho1.r)


def lp_distance(rho1: RadialDensity, rho2: RadialDensity, p: float = 1.0) -> float:
    """``||rho1 - rho2||_p`` on ``rho1``'s grid (``rho2`` interpolated if needed)."""
    if p < 1:
        raise ValueError("p must be >= 1")
    grid, a, b = _common(rho1, rho2)
    return grid.integrate(np.abs(a - b) ** p) ** (1.0 / p)


# -- CSV serialisation ------------------------------------------------------


def density_to_csv(rho: RadialDensity, provenance: str = "") -> str:
    """Two header lines (grid descriptor, provenance hash), then ``r,rho`` rows."""
    if not provenance:
        provenance = hashlib.sha256(rho.values.tobytes() + rho.r.tobytes()).hexdigest()
    buf = io.StringIO()
    buf.write(f"# grid: {rho.grid.descriptor}\n")
    buf.write(f"# provenance: {provenance}\n")
    buf.write("r,rho\n")
    for r, v in zip(rho.r, rho.values):
        buf.write(f"{r:.17g},{v:.17g}\n")
    return buf.getvalue()


def density_from_csv(text: str) -> RadialDensity:
    descriptor = "custom"
    rows = []
    for line in text.splitlines():
        if line.startswith("# grid:"):
            descriptor = line.split(":", 1)[1].strip()
        elif line.startswith("#") or line.startswith("r,") or not line.strip():
            continue
        else:
            r, v = line.split(",")
            rows.append((float(r), float(v)))
    data = np.array(rows)
    return RadialDensity(RadialGrid(data[:, 0], descriptor), data[:, 1])
