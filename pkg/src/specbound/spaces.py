"""Metric measure spaces in two forms: finite sampled point clouds (lattices,
rooted trees, explicit clouds) and analytic radial volume profiles."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate


def sphere_area(n: int) -> float:
    """Surface area of the unit (n-1)-sphere in R^n."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


class SampledSpace:
    """Finite point cloud with masses, a distance oracle and a base point.

    kind is one of "lattice", "tree", "cloud".  Lattices carry their cell
    spacing so moment computations can correct for sub-cell kernel mass;
    trees use the graph metric scaled by an edge length.
    Immutable after construction; all operations are pure reads.
    """

    def __init__(self, coords, mass, origin=0, kind="cloud", spacing=0.0,
                 tree=None, edge_length=1.0):
        coords = np.atleast_2d(np.asarray(coords, dtype=float))
        if coords.shape[0] == 1 and coords.shape[1] > 1 and kind != "cloud":
            coords = coords.T
        self.coords = coords
        self.mass = np.asarray(mass, dtype=float)
        if self.mass.ndim != 1 or self.mass.size != self.coords.shape[0]:
            raise ValueError("mass must be one weight per point")
        if np.any(self.mass <= 0):
            raise ValueError("all masses must be strictly positive")
        if not 0 <= origin < self.n:
            raise ValueError(f"origin id {origin} out of range")
        self.origin = int(origin)
        self.kind = kind
        self.spacing = float(spacing)
        self.edge_length = float(edge_length)
        if tree is not None:
            self._depth, self._anc = tree
        else:
            self._depth = self._anc = None
        self._d0 = self.dist_from(self.origin)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    @property
    def d0(self) -> np.ndarray:
        """Distances to the base point."""
        return self._d0

    @property
    def radius(self) -> float:
        return float(self._d0.max())

    @property
    def cell_radius(self) -> float:
        """Radius of the measure cell a lattice point represents (0 if n/a)."""
        if self.kind != "lattice":
            return 0.0
        if self.dim == 1:
            return self.spacing / 2.0
        # equal-area disc radius for a square cell
        return self.spacing / math.sqrt(math.pi)

    def _check_id(self, i):
        if not 0 <= i < self.n:
            raise IndexError(f"unknown point id {i}")

    def dist_from(self, i) -> np.ndarray:
        """Vector of distances from point i to every point."""
        self._check_id(i)
        if self.kind == "tree":
            eq = self._anc == self._anc[i]
            lca_depth = eq.cumprod(axis=1).sum(axis=1) - 1
            return (self._depth + self._depth[i] - 2 * lca_depth) * self.edge_length
        diff = self.coords - self.coords[i]
        return np.sqrt((diff * diff).sum(axis=1))

    def dist(self, i, j) -> float:
        self._check_id(j)
        return float(self.dist_from(i)[j])

    def dist_block(self, rows) -> np.ndarray:
        """Distance matrix from the given row ids to every point."""
        rows = np.asarray(rows, dtype=int)
        if self.kind == "tree":
            eq = self._anc[rows][:, None, :] == self._anc[None, :, :]
            lca_depth = eq.cumprod(axis=2).sum(axis=2) - 1
            return (self._depth[rows][:, None] + self._depth[None, :]
                    - 2 * lca_depth) * self.edge_length
        diff = self.coords[rows][:, None, :] - self.coords[None, :, :]
        return np.sqrt((diff * diff).sum(axis=2))

    def ball_indices(self, center, r) -> np.ndarray:
        if r < 0:
            raise ValueError("radius must be nonnegative")
        d = self.dist_from(center)
        return np.where(d <= r * (1 + 1e-12) + 1e-15)[0]

    def ball_mass(self, center, r) -> float:
        return float(self.mass[self.ball_indices(center, r)].sum())

    def boundary_gap(self, i) -> float:
        """Largest distance from point i that is fully covered by the sample.

        For lattices this is the per-axis distance to the nearest face of the
        bounding box (plus half a cell); beyond it sums over the cloud start
        missing continuum mass.  Trees and clouds return +inf / 0 heuristics.
        """
        self._check_id(i)
        if self.kind == "lattice":
            lo = self.coords.min(axis=0)
            hi = self.coords.max(axis=0)
            gaps = np.minimum(self.coords[i] - lo, hi - self.coords[i])
            return float(gaps.min() + self.spacing / 2.0)
        return float("inf")

    def axis_gaps(self, i):
        """Per-side coverage distances for a 1-D lattice (left, right)."""
        if self.kind != "lattice" or self.dim != 1:
            raise ValueError("axis_gaps only applies to 1-D lattices")
        x = self.coords[i, 0]
        return (float(x - self.coords[:, 0].min() + self.spacing / 2.0),
                float(self.coords[:, 0].max() - x + self.spacing / 2.0))

    def spot_check_metric(self, rng=None, triples=10_000):
        """Probabilistic triangle-inequality / symmetry check; raises on failure."""
        rng = np.random.default_rng(rng)
        idx = rng.integers(0, self.n, size=(triples, 3))
        for a, b, c in idx[: min(64, triples)]:
            dab, dba = self.dist(a, b), self.dist(b, a)
            if not math.isclose(dab, dba, rel_tol=1e-12, abs_tol=1e-12):
                raise AssertionError("distance not symmetric")
        for a, b, c in idx:
            dab = self.dist(a, b)
            dbc = self.dist(b, c)
            dac = self.dist(a, c)
            if dac > dab + dbc + 1e-9 * (1 + dac):
                raise AssertionError("triangle inequality violated")

    def to_csv(self, path):
        cols = ",".join(f"coord{k}" for k in range(self.dim))
        with open(path, "w") as fh:
            fh.write(f"id,{cols},mass\n")
            for i in range(self.n):
                coord = ",".join(repr(c) for c in self.coords[i])
                fh.write(f"{i},{coord},{repr(self.mass[i])}\n")


def make_lattice_space(dim, extent, spacing) -> SampledSpace:
    """Uniform grid of (2*extent+1)^dim points with cell-volume masses.

    The origin point sits at coordinate 0 and each point carries mass
    spacing^dim, so ball masses Riemann-approximate Lebesgue volumes.
    """
    if dim not in (1, 2):
        raise ValueError("dim must be 1 or 2")
    if extent < 2 or int(extent) != extent:
        raise ValueError("extent must be an integer >= 2")
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    axis = np.arange(-extent, extent + 1, dtype=float) * spacing
    if dim == 1:
        coords = axis[:, None]
    else:
        X, Y = np.meshgrid(axis, axis, indexing="ij")
        coords = np.column_stack([X.ravel(), Y.ravel()])
    origin = int(np.argmin(np.abs(coords).sum(axis=1)))
    mass = np.full(coords.shape[0], float(spacing) ** dim)
    return SampledSpace(coords, mass, origin=origin, kind="lattice", spacing=spacing)


def make_exponential_tree_space(branching, depth, edge_length=1.0) -> SampledSpace:
    """Complete rooted b-ary tree with graph metric; unit mass per vertex.

    Ball counts around the root grow like b^k, a discrete stand-in for
    exponential volume growth at rate log(b)/edge_length.
    """
    b = int(branching)
    if b < 2:
        raise ValueError("branching must be an integer >= 2")
    if depth < 1 or int(depth) != depth:
        raise ValueError("depth must be an integer >= 1")
    if edge_length <= 0:
        raise ValueError("edge_length must be positive")
    depth = int(depth)
    n = (b ** (depth + 1) - 1) // (b - 1)
    parent = np.empty(n, dtype=np.int64)
    parent[0] = 0
    idx = np.arange(1, n)
    parent[1:] = (idx - 1) // b
    depth_arr = np.zeros(n, dtype=np.int64)
    lo = 1
    for lvl in range(1, depth + 1):  # level lvl spans b**lvl nodes in heap order
        hi = lo + b ** lvl
        depth_arr[lo:hi] = lvl
        lo = hi
    anc = np.full((n, depth + 1), -1, dtype=np.int64)
    anc[np.arange(n), depth_arr] = np.arange(n)
    for lvl in range(depth - 1, -1, -1):
        have = anc[:, lvl + 1] >= 0
        anc[have, lvl] = parent[anc[have, lvl + 1]]
    coords = (depth_arr * edge_length)[:, None].astype(float)
    mass = np.ones(n)
    return SampledSpace(coords, mass, origin=0, kind="tree",
                        tree=(depth_arr, anc), edge_length=edge_length)


def make_cloud_space(coords, mass, origin=0) -> SampledSpace:
    """Explicit coordinate list with Euclidean distances."""
    return SampledSpace(coords, mass, origin=origin, kind="cloud")


def ball_volume(space: SampledSpace, center, r) -> float:
    """Total mass of the closed ball of radius r around a point id."""
    return space.ball_mass(center, r)


@dataclass(frozen=True)
class Ball:
    center: int
    radius: float

    def contains(self, space: SampledSpace, j) -> bool:
        return space.dist(self.center, j) <= self.radius


class RadialProfile:
    """Analytic volume function r -> V(r) with growth-class metadata.

    tail_rate / tail_degree describe V(s) ~ const * exp(tail_rate*s) * s^tail_degree
    for large s and drive integrability classification of moment quadrature.
    """

    def __init__(self, kind, volume_fn, tail_rate, tail_degree,
                 damped_fn=None, total=float("inf"), params=None, near_degree=1.0):
        self.kind = kind
        self._volume = volume_fn
        self.tail_rate = float(tail_rate)
        self.tail_degree = float(tail_degree)
        self.near_degree = float(near_degree)  # V(s) ~ const * s**near_degree at 0
        self._damped = damped_fn
        self.total_volume = total
        self.params = dict(params or {})

    def volume(self, R) -> float:
        if R < 0:
            raise ValueError("radius must be nonnegative")
        if R == 0:
            return 0.0
        return float(self._volume(R))

    def damped_volume(self, s, damp) -> float:
        """exp(-damp*s) * V(s), computed without overflowing for large s."""
        if self._damped is not None:
            return float(self._damped(s, damp))
        return math.exp(-damp * s) * self.volume(s)

    @staticmethod
    def polynomial(c1, eta) -> "RadialProfile":
        if c1 <= 0 or eta <= 0:
            raise ValueError("polynomial profile needs c1 > 0, eta > 0")
        return RadialProfile(
            "polynomial", lambda R: c1 * R ** eta, 0.0, eta,
            damped_fn=lambda s, damp: c1 * s ** eta * math.exp(-damp * s),
            params={"c1": c1, "eta": eta}, near_degree=eta)

    @staticmethod
    def two_regime(c1, eta, kappa, c2=None) -> "RadialProfile":
        """Polynomial up to radius 1, exponential beyond; continuous by default."""
        if c2 is None:
            c2 = c1 * math.exp(-kappa)
        if c2 * math.exp(kappa) < c1 * (1 - 1e-12):
            raise ValueError("two-regime profile would decrease at the splice")

        def vol(R):
            return c1 * R ** eta if R <= 1.0 else c2 * math.exp(kappa * R)

        def damped(s, damp):
            if s <= 1.0:
                return c1 * s ** eta * math.exp(-damp * s)
            return c2 * math.exp((kappa - damp) * s)

        return RadialProfile("two-regime", vol, kappa, 0.0, damped_fn=damped,
                             params={"c1": c1, "eta": eta, "c2": c2, "kappa": kappa},
                             near_degree=eta)

    @staticmethod
    def exponential(c, kappa) -> "RadialProfile":
        """V(R) = c*(exp(kappa R) - 1); the -1 keeps V(0) = 0."""
        return RadialProfile(
            "exponential", lambda R: c * math.expm1(kappa * R), kappa, 0.0,
            damped_fn=lambda s, damp: c * (math.exp((kappa - damp) * s)
                                           - math.exp(-damp * s)),
            params={"c": c, "kappa": kappa}, near_degree=1.0)

    @staticmethod
    def hyperbolic(n) -> "RadialProfile":
        """Volume of hyperbolic balls: omega_n * integral of sinh(t)^(n-1)."""
        if int(n) != n or n < 2:
            raise ValueError("hyperbolic profile needs integer n >= 2")
        n = int(n)
        omega = sphere_area(n)

        def vol(R):
            val, _ = integrate.quad(lambda t: math.sinh(t) ** (n - 1), 0.0, R)
            return omega * val

        # binomial expansion of sinh^(n-1) keeps exp(-damp*s)*V(s) finite where
        # the raw quadrature value would overflow
        ks = np.arange(n)
        signs = (-1.0) ** ks
        binom = np.array([math.comb(n - 1, int(k)) for k in ks])
        rates = (n - 1) - 2 * ks

        def damped(s, damp):
            total = 0.0
            for sign, cb, rate in zip(signs, binom, rates):
                if rate == 0:
                    term = s * math.exp(-damp * s)
                else:
                    term = (math.exp((rate - damp) * s) - math.exp(-damp * s)) / rate
                total += sign * cb * term
            return omega * total / 2.0 ** (n - 1)

        return RadialProfile("hyperbolic", vol, float(n - 1), 0.0,
                             damped_fn=damped, params={"n": n}, near_degree=float(n))

    @staticmethod
    def custom(radii, volumes) -> "RadialProfile":
        radii = np.asarray(radii, dtype=float)
        volumes = np.asarray(volumes, dtype=float)
        if np.any(np.diff(volumes) < 0):
            raise ValueError("tabulated volume must be nondecreasing")
        fn = lambda R: float(np.interp(R, radii, volumes))
        return RadialProfile("custom", fn, 0.0, 0.0, total=float(volumes[-1]),
                             params={"r_max": float(radii[-1])})
