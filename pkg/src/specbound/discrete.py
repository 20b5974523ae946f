"""Discretized quadratic form, exponential test functions, Rayleigh quotients
and exterior extremal eigenvalues - the oracles the spectral bounds are
validated against."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .gauges import AdaptedGauge
from .kernels import big_jump_mass
from .spaces import SampledSpace


class DiscreteForm:
    """Sparse symmetric jump form over in-range pairs of a sampled space.

    Stores each unordered pair once with coefficient
    J(x,y) * measure_weight(x) * mass(y); energies use the symmetric
    double-count convention, so energy(u) = 2 * sum over pairs.
    """

    def __init__(self, space, xweights, rows, cols, vals, cutoff, dropped_mass_bound):
        self.space = space
        self.xweights = xweights
        self.rows = rows
        self.cols = cols
        self.vals = vals
        self.cutoff = cutoff
        self.dropped_mass_bound = dropped_mass_bound
        self._matrix = None

    @property
    def n(self):
        return self.space.n

    def energy(self, u) -> float:
        u = np.asarray(u, dtype=float)
        du = u[self.rows] - u[self.cols]
        return 2.0 * float(np.sum(du * du * self.vals))

    def norm_sq(self, u) -> float:
        u = np.asarray(u, dtype=float)
        return float(np.sum(u * u * self.xweights))

    def operator_matrix(self) -> sparse.csr_matrix:
        """A = 2(D - W) so that energy(u) = u^T A u."""
        if self._matrix is None:
            n = self.n
            W = sparse.coo_matrix(
                (np.concatenate([self.vals, self.vals]),
                 (np.concatenate([self.rows, self.cols]),
                  np.concatenate([self.cols, self.rows]))),
                shape=(n, n)).tocsr()
            deg = np.asarray(W.sum(axis=1)).ravel()
            self._matrix = 2.0 * (sparse.diags(deg) - W).tocsr()
        return self._matrix

    def save_coo(self, path):
        with open(path, "w") as fh:
            for i, j, v in zip(self.rows, self.cols, self.vals):
                fh.write(f"{i} {j} {repr(float(v))}\n")


def estimate_pair_count(space, cutoff, probe=16) -> int:
    rows = np.unique(np.linspace(0, space.n - 1, probe).astype(int))
    d = space.dist_block(rows)
    per_row = float(np.mean((d > 0) & (d <= cutoff), axis=1).mean()) * space.n
    return int(per_row * space.n / 2.0)


def assemble(space: SampledSpace, kernel, xweights=None, cutoff=None,
             budget_mb=1024, chunk=64) -> DiscreteForm:
    """Build the coefficient table over pairs within the range cutoff.

    The neglected far-field energy is bounded by dropped_mass_bound (the
    worst big-jump rate beyond the cutoff), reported rather than silently
    ignored.  Refuses assemblies whose estimated size exceeds budget_mb.
    """
    if cutoff is None:
        cutoff = space.radius * 2.0
    typical = space.spacing if space.kind == "lattice" else space.edge_length
    if space.kind != "cloud" and cutoff <= typical:
        raise ValueError("cutoff must exceed the typical point spacing")
    if xweights is None:
        xweights = space.mass
    xweights = np.asarray(xweights, dtype=float)

    est = estimate_pair_count(space, cutoff)
    est_mb = est * 24 / 1e6
    if est_mb > budget_mb:
        raise ValueError(
            f"assembly would need ~{est:.2e} pairs (~{est_mb:.0f} MB) "
            f"over budget {budget_mb} MB; raise the budget or lower the cutoff")

    d0 = space.d0
    rows_out, cols_out, vals_out = [], [], []
    for start in range(0, space.n, chunk):
        ids = np.arange(start, min(start + chunk, space.n))
        dblock = space.dist_block(ids)
        for k, i in enumerate(ids):
            d = dblock[k]
            mask = (d > 0) & (d <= cutoff)
            mask[: i + 1] = False  # store each unordered pair once (i < j)
            if not mask.any():
                continue
            js = np.where(mask)[0]
            dens = kernel.density(d[js], d0[i], d0[js])
            rows_out.append(np.full(js.size, i, dtype=np.int64))
            cols_out.append(js.astype(np.int64))
            vals_out.append(dens * xweights[i] * space.mass[js])

    rows = np.concatenate(rows_out) if rows_out else np.empty(0, dtype=np.int64)
    cols = np.concatenate(cols_out) if cols_out else np.empty(0, dtype=np.int64)
    vals = np.concatenate(vals_out) if vals_out else np.empty(0)

    probe_ids = np.unique(np.linspace(0, space.n - 1, 32).astype(int))
    dropped = 0.0
    if cutoff < space.radius * 2.0:
        dropped = max(big_jump_mass(kernel, space, int(i), cutoff) for i in probe_ids)
    return DiscreteForm(space, xweights, rows, cols, vals, float(cutoff), float(dropped))


def rayleigh(form: DiscreteForm, f) -> float:
    """energy(f) / ||f||^2 in the form's measure."""
    nsq = form.norm_sq(f)
    if nsq <= 0.0:
        raise ValueError("Rayleigh quotient needs a function with positive norm")
    return form.energy(f) / nsq


@dataclass(frozen=True)
class PhiProfile:
    """phi(t) = (1 - e^(alpha t))^2 / (1 + e^(2 alpha t)): even, vanishing at 0,
    increasing on t >= 0 and dominated by (alpha t)^2 / 2."""
    alpha: float

    def value(self, t):
        at = self.alpha * np.abs(np.asarray(t, dtype=float))
        e = np.exp(-at)  # rewrite with decaying exponentials so large t is stable
        return (1.0 - e) ** 2 / (1.0 + e * e)


@dataclass
class TestFunction:
    """Exponential profile f = e^(w(rho_r)) - 1 with companion g per variant."""
    variant: str
    r: float
    alpha: float
    R_n: float
    rho_values: np.ndarray
    f: np.ndarray
    g: np.ndarray


def _w_profile(variant, alpha, R_n, t):
    t = np.asarray(t, dtype=float)
    half = R_n / 2.0
    if variant == "infinite-volume":
        return np.where(t <= half, alpha * half,
                        np.where(t <= R_n, alpha * (R_n - t), 0.0))
    return np.where(t <= half, 0.0,
                    np.where(t <= R_n, alpha * (t - half), alpha * half))


def build_test_function(variant, gauge: AdaptedGauge, r, alpha, R_n,
                        space: SampledSpace, growth=0.0) -> TestFunction:
    """Construct the test-function pair (f, g) at rung R_n.

    The hypothesis alpha > growth/2 of the spectral bound is enforced here;
    R_n must stay within the gauge range realized on the sampled space.
    """
    if variant not in ("infinite-volume", "finite-volume"):
        raise ValueError(f"unknown variant {variant!r}")
    if alpha <= growth / 2.0:
        raise ValueError(
            f"alpha must exceed half the growth rate: alpha={alpha}, growth={growth}")
    rho = gauge.rho(r, space.d0)
    if R_n > rho.max() * (1 + 1e-9):
        raise ValueError(f"rung R_n={R_n} exceeds the usable gauge range {rho.max():.3g}")
    w = _w_profile(variant, alpha, R_n, rho)
    f = np.expm1(w)
    if variant == "infinite-volume":
        indicator = rho <= R_n
    else:
        indicator = rho > R_n / 2.0
    g = (f + 2.0) * indicator
    return TestFunction(variant, float(r), float(alpha), float(R_n), rho, f, g)


@dataclass
class LemmaReport:
    pairs_checked: int
    pointwise_failures: int
    pointwise_worst: float          # max LHS/RHS over pairs with RHS > 0
    energy: float
    integrated_rhs: float
    integrated_margin: float
    norm_ratio: float               # ||f|| / ||g||

    @property
    def pointwise_ok(self):
        return self.pointwise_failures == 0

    def to_dict(self):
        return {
            "pairs_checked": self.pairs_checked,
            "pointwise_failures": self.pointwise_failures,
            "pointwise_worst": self.pointwise_worst,
            "energy": self.energy,
            "integrated_rhs": self.integrated_rhs,
            "integrated_margin": self.integrated_margin,
            "norm_ratio": self.norm_ratio,
        }


def lemma33_check(form: DiscreteForm, tf: TestFunction, moments, alpha=None) -> LemmaReport:
    """Check the pointwise and integrated energy bounds for a test function.

    Pointwise: (f(x)-f(y))^2 <= phi(|rho x - rho y|)(g(x)^2 + g(y)^2) on every
    coefficient pair.  Integrated: energy(f) <= alpha^2 M1 ||g||^2 + 2 M2 ||f||^2.
    Failures are findings, not errors.
    """
    if alpha is None:
        alpha = tf.alpha
    phi = PhiProfile(alpha)
    drho = tf.rho_values[form.rows] - tf.rho_values[form.cols]
    lhs = (tf.f[form.rows] - tf.f[form.cols]) ** 2
    rhs = phi.value(drho) * (tf.g[form.rows] ** 2 + tf.g[form.cols] ** 2)
    ok = lhs <= rhs * (1.0 + 1e-12) + 1e-300  # rounding slack only
    failures = int(np.sum(~ok))
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(rhs > 0, lhs / np.where(rhs > 0, rhs, 1.0), 0.0)
    worst = float(ratio.max()) if ratio.size else 0.0

    energy = form.energy(tf.f)
    g_sq = form.norm_sq(tf.g)
    f_sq = form.norm_sq(tf.f)
    rhs_int = alpha ** 2 * moments.m1 * g_sq + 2.0 * moments.m2 * f_sq
    ratio_norm = math.sqrt(f_sq / g_sq) if g_sq > 0 else float("inf")
    return LemmaReport(int(lhs.size), failures, worst, energy, rhs_int,
                       rhs_int - energy, ratio_norm)


def weak_overlap(form: DiscreteForm, probe, tf: TestFunction) -> float:
    """|<probe, f/||f||>| in the form's measure: the weak-convergence proxy."""
    u = np.asarray(probe, dtype=float)
    nu = math.sqrt(form.norm_sq(u))
    nf = math.sqrt(form.norm_sq(tf.f))
    if nu <= 0 or nf <= 0:
        raise ValueError("probe and test function need positive norms")
    inner = float(np.sum(u * tf.f * form.xweights))
    return abs(inner) / (nu * nf)


def persson_exterior_lambda(form: DiscreteForm, exclusion_radius,
                            solver_tol=1e-8, maxiter=10_000, seed=0) -> float:
    """Smallest Rayleigh quotient over functions vanishing on the origin ball.

    Restricted-index Dirichlet formulation: rows/columns of excluded points
    are removed while diagonal jump rates keep the full sums (absorbing
    wall).  Solved as a symmetric extremal eigenproblem after mass scaling.
    """
    d0 = form.space.d0
    ext = np.where(d0 > exclusion_radius)[0]
    if ext.size == 0:
        raise ValueError("exterior is empty after exclusion")
    A = form.operator_matrix()
    A_sub = A[np.ix_(ext, ext)].tocsr()
    scale = 1.0 / np.sqrt(form.xweights[ext])
    B = sparse.diags(scale) @ A_sub @ sparse.diags(scale)
    B = (B + B.T) * 0.5  # kill rounding asymmetry before Lanczos
    if ext.size < 3:
        return float(np.linalg.eigvalsh(B.toarray())[0])
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(ext.size)
    try:
        vals = eigsh(B, k=1, which="SA", v0=v0, tol=solver_tol,
                     maxiter=maxiter, return_eigenvectors=False)
    except ArpackNoConvergence as exc:
        raise RuntimeError(
            f"extremal eigensolve did not converge within {maxiter} iterations "
            f"(residual eigenvalues: {exc.eigenvalues})") from exc
    return float(vals[0])


def persson_ladder(form: DiscreteForm, radii, **kwargs):
    """Exterior eigenvalues for a ladder of exclusion radii (nondecreasing)."""
    return [(float(r0), persson_exterior_lambda(form, r0, **kwargs)) for r0 in radii]
