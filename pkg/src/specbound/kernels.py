"""Symmetric jump kernel densities J(x,y) against the reference measure,
plus potential-tilted and time-changed derived kernels.

Every kernel evaluates through `density(d, d0x, d0y)` so the same object
drives lattice sums, tree sums and radial quadrature envelopes.  Densities
are taken with the implied asymptotic constants fixed to the stated C's
(default 1); reports echo the constants so bounds stay interpretable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


@dataclass(frozen=True)
class EnvelopePiece:
    """One branch of a radial envelope: J(s) = exp(-rate*s) * q(s)."""
    rate: float
    q: Callable
    qprime: Callable
    power_at_inf: float  # q(s) ~ const * s**power_at_inf


@dataclass(frozen=True)
class RadialEnvelope:
    """Piecewise radial profile of a kernel, split at `split` (usually 1)."""
    split: float
    near: EnvelopePiece
    far: EnvelopePiece

    def value(self, s):
        piece = self.near if s <= self.split else self.far
        return math.exp(-piece.rate * s) * piece.q(s)


def _power_piece(coeff, power):
    return EnvelopePiece(
        rate=0.0,
        q=lambda s, c=coeff, p=power: c * s ** p,
        qprime=lambda s, c=coeff, p=power: c * p * s ** (p - 1.0),
        power_at_inf=power)


@dataclass(frozen=True)
class FractionalKernel:
    """J(x,y) = c * d(x,y)^-(eta+alpha); the stable-like model kernel."""
    eta: float
    alpha: float
    c: float = 1.0

    def __post_init__(self):
        if not 0 < self.alpha < 2:
            raise ValueError("alpha must lie in (0, 2)")
        if self.eta <= 0 or self.c <= 0:
            raise ValueError("eta and c must be positive")

    def density(self, d, d0x=None, d0y=None):
        return self.c * np.asarray(d, dtype=float) ** -(self.eta + self.alpha)

    def near_field(self, d0x):
        return self.c, self.eta + self.alpha

    def tail_envelope(self, d0x):
        return lambda s: self.c * s ** -(self.eta + self.alpha)

    def radial_envelope(self) -> RadialEnvelope:
        piece = _power_piece(self.c, -(self.eta + self.alpha))
        return RadialEnvelope(1.0, piece, piece)


@dataclass(frozen=True)
class TwoRegimeKernel:
    """Separate power laws for jumps below and above unit length."""
    eta: float
    beta1: float
    beta2: float
    c2: float = 1.0
    c3: float = 1.0

    def __post_init__(self):
        if not 0 < self.beta1 < 2:
            raise ValueError("beta1 must lie in (0, 2)")
        if self.beta2 <= 0:
            raise ValueError("beta2 must be positive")

    def density(self, d, d0x=None, d0y=None):
        d = np.asarray(d, dtype=float)
        out = np.where(d <= 1.0,
                       self.c2 * d ** -(self.eta + self.beta1),
                       self.c3 * d ** -(self.eta + self.beta2))
        return out

    def near_field(self, d0x):
        return self.c2, self.eta + self.beta1

    def tail_envelope(self, d0x):
        def env(s):
            if s <= 1.0:
                return self.c2 * s ** -(self.eta + self.beta1)
            return self.c3 * s ** -(self.eta + self.beta2)
        return env

    def radial_envelope(self) -> RadialEnvelope:
        return RadialEnvelope(
            1.0,
            _power_piece(self.c2, -(self.eta + self.beta1)),
            _power_piece(self.c3, -(self.eta + self.beta2)))


@dataclass(frozen=True)
class ExpTiltedKernel:
    """Power-law small jumps with an exponentially damped far tail.

    Far branch c4 * exp(-lam*d) * d^-beta2 models kernels over exponentially
    growing volume; lam below the volume growth rate makes the big-jump rate
    diverge, which the moment quadrature reports rather than hides.
    """
    eta: float
    beta1: float
    beta2: float
    lam: float
    c3: float = 1.0
    c4: float = 1.0

    def __post_init__(self):
        if not 0 < self.beta1 < 2:
            raise ValueError("beta1 must lie in (0, 2)")
        if self.lam <= 0:
            raise ValueError("lam must be positive")

    def density(self, d, d0x=None, d0y=None):
        d = np.asarray(d, dtype=float)
        return np.where(d <= 1.0,
                        self.c3 * d ** -(self.eta + self.beta1),
                        self.c4 * np.exp(-self.lam * d) * d ** -self.beta2)

    def near_field(self, d0x):
        return self.c3, self.eta + self.beta1

    def tail_envelope(self, d0x):
        def env(s):
            if s <= 1.0:
                return self.c3 * s ** -(self.eta + self.beta1)
            return self.c4 * math.exp(-self.lam * s) * s ** -self.beta2
        return env

    def radial_envelope(self) -> RadialEnvelope:
        far = EnvelopePiece(
            rate=self.lam,
            q=lambda s: self.c4 * s ** -self.beta2,
            qprime=lambda s: -self.c4 * self.beta2 * s ** -(self.beta2 + 1.0),
            power_at_inf=-self.beta2)
        return RadialEnvelope(1.0, _power_piece(self.c3, -(self.eta + self.beta1)), far)


@dataclass(frozen=True)
class CoefficientField:
    """c(x,y): unbounded symmetric coefficient split across unit jump height."""
    p: float
    q: float

    def __post_init__(self):
        if not 0 <= self.p <= 2:
            raise ValueError("p must lie in [0, 2]")
        if not 0 <= self.q < 2:
            raise ValueError("q must lie in [0, 2)")

    def value(self, d, d0x, d0y):
        d = np.asarray(d, dtype=float)
        near = (1.0 + d0x) ** self.p + (1.0 + d0y) ** self.p
        far = (1.0 + d0x) ** self.q + (1.0 + d0y) ** self.q
        return np.where(d <= 1.0, near, far)


@dataclass(frozen=True)
class CoeffGrowthKernel:
    """J(x,y) = c2 * c(x,y) / d^(eta+beta) with a growing coefficient field."""
    eta: float
    beta: float
    p: float
    q: float
    c2: float = 1.0

    def __post_init__(self):
        if not 0 < self.beta < 2:
            raise ValueError("beta must lie in (0, 2)")
        if not self.q < self.beta:
            raise ValueError("requires q < beta")
        CoefficientField(self.p, self.q)  # validates the exponent domains

    @property
    def coefficient(self) -> CoefficientField:
        return CoefficientField(self.p, self.q)

    def density(self, d, d0x=None, d0y=None):
        d = np.asarray(d, dtype=float)
        c = self.coefficient.value(d, d0x, d0y)
        return self.c2 * c * d ** -(self.eta + self.beta)

    def near_field(self, d0x):
        return self.c2 * 2.0 * (1.0 + d0x) ** self.p, self.eta + self.beta

    def tail_envelope(self, d0x):
        # for a jump of length s the far endpoint has d0 <= d0x + s
        def env(s):
            if s <= 1.0:
                c = 2.0 * (1.0 + d0x + s) ** self.p
            else:
                c = 2.0 * (1.0 + d0x + s) ** self.q
            return self.c2 * c * s ** -(self.eta + self.beta)
        return env

    def radial_envelope(self):
        return None  # depends on both endpoints, not radial


@dataclass(frozen=True)
class HyperbolicKernel:
    """Asymptotic profile of the subordinated kernel on n-dim hyperbolic space.

    Two-sided asymptotics are only known up to constants; `c` scales the
    single implemented profile, so upper/lower variants are rescalings.
    """
    n: int
    alpha: float
    c: float = 1.0

    def __post_init__(self):
        if not 0 < self.alpha < 2:
            raise ValueError("alpha must lie in (0, 2)")
        if self.n < 2:
            raise ValueError("n must be >= 2")

    def _far(self, d):
        return np.exp(-(self.n - 1.0) * d) / (d ** self.alpha * (1.0 + d ** (1.0 - self.alpha / 2.0)))

    def density(self, d, d0x=None, d0y=None):
        d = np.asarray(d, dtype=float)
        return self.c * np.where(d < 1.0, d ** -(self.n + self.alpha), self._far(np.maximum(d, 1.0)))

    def near_field(self, d0x):
        return self.c, self.n + self.alpha

    def tail_envelope(self, d0x):
        def env(s):
            if s < 1.0:
                return self.c * s ** -(self.n + self.alpha)
            return self.c * float(self._far(s))
        return env

    def radial_envelope(self) -> RadialEnvelope:
        a, n, c = self.alpha, float(self.n), self.c

        def q(s):
            return c / (s ** a * (1.0 + s ** (1.0 - a / 2.0)))

        def qprime(s):
            u = 1.0 + s ** (1.0 - a / 2.0)
            du = (1.0 - a / 2.0) * s ** (-a / 2.0)
            return -c * (a * s ** (a - 1.0) * u + s ** a * du) / (s ** a * u) ** 2

        far = EnvelopePiece(rate=n - 1.0, q=q, qprime=qprime,
                            power_at_inf=-(a + 1.0 - a / 2.0))
        return RadialEnvelope(1.0, _power_piece(c, -(n + a)), far)


class Potential:
    """Increasing radial potential with a numerically certified ratio condition."""

    def __init__(self, fn, delta=None, c2=None, params=None):
        self._fn = fn
        self.delta = delta
        self.c2 = c2
        self.params = dict(params or {})
        self.ratio_certified = False

    def value(self, t):
        return self._fn(np.asarray(t, dtype=float))

    @staticmethod
    def power(a, gamma) -> "Potential":
        return Potential(lambda t: a * t ** gamma, params={"kind": "power", "a": a, "gamma": gamma})

    @staticmethod
    def log_power(theta, loglog_coeff=0.0) -> "Potential":
        def fn(t):
            val = theta * np.log1p(t)
            if loglog_coeff:
                val = val - loglog_coeff * np.log(np.log(math.e + t))
            return val
        return Potential(fn, params={"kind": "log_power", "theta": theta,
                                     "loglog_coeff": loglog_coeff})

    @staticmethod
    def custom(radii, values) -> "Potential":
        radii = np.asarray(radii, dtype=float)
        values = np.asarray(values, dtype=float)
        return Potential(lambda t: np.interp(t, radii, values),
                         params={"kind": "custom"})

    def certify_ratio(self, delta, c2, s_lo=1e-2, s_hi=1e3, points=60) -> bool:
        """Check exp(V(r)-V(s)) <= c2*(r/s)^delta on a log grid, 0 < s < r.

        Also spot-checks monotonicity.  Sets `ratio_certified` on success.
        """
        grid = np.exp(np.linspace(math.log(s_lo), math.log(s_hi), points))
        v = self.value(grid)
        if np.any(np.diff(v) < -1e-12):
            return False
        ok = True
        for i in range(points):
            for j in range(i + 1, points):
                s, r = grid[i], grid[j]
                if v[j] - v[i] > math.log(c2) + delta * math.log(r / s) + 1e-9:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            self.delta, self.c2 = delta, c2
            self.ratio_certified = True
        return ok


@dataclass(frozen=True)
class TiltedKernel:
    """Kernel of the potential-tilted form, as a density against the base measure.

    Understood against mu_V(dx) = exp(-V(d0(x))) m(dx) on the left; the measure
    tilted(x,y) * exp(-V(d0x)) m(dx) m(dy) is symmetric (detailed balance).
    """
    base: object
    potential: Potential

    def density(self, d, d0x=None, d0y=None):
        vx = self.potential.value(d0x)
        vy = self.potential.value(d0y)
        return 0.5 * (1.0 + np.exp(vx - vy)) * self.base.density(d, d0x, d0y)

    def near_field(self, d0x):
        return self.base.near_field(d0x)  # tilt factor -> 1 on the diagonal

    def tail_envelope(self, d0x):
        base_env = self.base.tail_envelope(d0x)
        vx = float(self.potential.value(d0x))

        def env(s):
            far_d0 = max(0.0, s - d0x)  # far endpoint is at least this far out
            vy = float(self.potential.value(far_d0))
            return 0.5 * (1.0 + math.exp(vx - vy)) * base_env(s)
        return env

    def radial_envelope(self):
        return None


@dataclass(frozen=True)
class TimeChangeWeight:
    """w(x) = (1+d0(x))^p; the time change uses mu(dx) = w^-1 m(dx)."""
    p: float

    def __post_init__(self):
        if self.p <= 0:
            raise ValueError("p must be positive")

    def value(self, d0):
        return (1.0 + np.asarray(d0, dtype=float)) ** self.p


@dataclass(frozen=True)
class TimeChangeKernel:
    """w(x) * J(x,y): kernel of the time-changed form against the base measure."""
    base: object
    weight: TimeChangeWeight

    def density(self, d, d0x=None, d0y=None):
        return self.weight.value(d0x) * self.base.density(d, d0x, d0y)

    def near_field(self, d0x):
        coeff, power = self.base.near_field(d0x)
        return float(self.weight.value(d0x)) * coeff, power

    def tail_envelope(self, d0x):
        base_env = self.base.tail_envelope(d0x)
        w = float(self.weight.value(d0x))
        return lambda s: w * base_env(s)

    def radial_envelope(self):
        return None


def eval_kernel(kernel, space, i, j) -> float:
    """Kernel density for a concrete point pair; the diagonal is excluded."""
    if i == j:
        raise ValueError("kernel density is undefined on the diagonal")
    d = space.dist(i, j)
    return float(kernel.density(np.asarray([d]), space.d0[i], space.d0[j])[0])


def big_jump_mass(kernel, space, i, threshold) -> float:
    """Total jump rate out of point i across jumps longer than `threshold`."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    d = space.dist_from(i)
    mask = d > threshold
    if not mask.any():
        return 0.0
    dens = kernel.density(d[mask], space.d0[i], space.d0[mask])
    return float(np.sum(dens * space.mass[mask]))


_FAMILY_BUILDERS = {
    "fractional": lambda p: FractionalKernel(eta=p["eta"], alpha=p["alpha"], c=p.get("c", 1.0)),
    "two-regime": lambda p: TwoRegimeKernel(eta=p["eta"], beta1=p["beta1"], beta2=p["beta2"],
                                            c2=p.get("c2", 1.0), c3=p.get("c3", 1.0)),
    "exp-tilted": lambda p: ExpTiltedKernel(eta=p["eta"], beta1=p["beta1"], beta2=p["beta2"],
                                            lam=p["lam"], c3=p.get("c3", 1.0), c4=p.get("c4", 1.0)),
    "coeff-growth": lambda p: CoeffGrowthKernel(eta=p["eta"], beta=p["beta"], p=p["p"],
                                                q=p["q"], c2=p.get("c2", 1.0)),
    "hyperbolic-asymptotic": lambda p: HyperbolicKernel(n=p["n"], alpha=p["alpha"], c=p.get("c", 1.0)),
}


def kernel_from_config(family, params) -> object:
    """Build a kernel from its config tag; raises on unknown families."""
    try:
        builder = _FAMILY_BUILDERS[family]
    except KeyError:
        raise ValueError(f"unknown kernel family {family!r}") from None
    return builder(params)
