"""Adapted length functions rho_r and jump-height thresholds F_r.

The gauge splits jumps into small (d <= F_r(x,y)) and big (d > F_r(x,y));
rho_r feeds the sublevel sets whose volume growth drives the spectral bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

RHO_TAGS = ("identity", "power-shift", "log-shift")
F_TAGS = ("constant", "power-max", "linear-max")


@dataclass(frozen=True)
class AdaptedGauge:
    """Pair (rho_r, F_r) plus an optional sup bound on the local-part density.

    rho tags: identity d0(x); power-shift (1+r+d0)^delta; log-shift log(r+d0)
    (the log tag needs r >= 1 so values stay nonnegative).
    F tags: constant r; power-max c*(r + max(d0x,d0y))^(1-delta);
    linear-max c*(r + max(d0x,d0y)) with c in (0,1).
    gamma_sup carries a user-supplied bound on the strongly local part's
    energy density of rho_r; point clouds never discretize that part.
    """

    rho_tag: str = "identity"
    f_tag: str = "constant"
    delta: float | None = None
    c_star: float = 0.5
    gamma_sup: float = 0.0

    def __post_init__(self):
        if self.rho_tag not in RHO_TAGS:
            raise ValueError(f"unknown rho tag {self.rho_tag!r}")
        if self.f_tag not in F_TAGS:
            raise ValueError(f"unknown F tag {self.f_tag!r}")
        if self.rho_tag == "power-shift" or self.f_tag == "power-max":
            if self.delta is None or not 0.0 < self.delta < 1.0:
                raise ValueError("power tags need delta in (0, 1)")
        if self.f_tag in ("power-max", "linear-max"):
            if not 0.0 < self.c_star < 1.0:
                raise ValueError("max-type thresholds need c_star in (0, 1)")
        if self.gamma_sup < 0:
            raise ValueError("gamma_sup must be nonnegative")

    def _check_r(self, r):
        if r <= 0:
            raise ValueError("scale r must be positive")
        if self.rho_tag == "log-shift" and r < 1.0:
            raise ValueError("log-shift gauge needs r >= 1")

    def rho(self, r, d0):
        self._check_r(r)
        d0 = np.asarray(d0, dtype=float)
        if self.rho_tag == "identity":
            return d0
        if self.rho_tag == "power-shift":
            return (1.0 + r + d0) ** self.delta
        return np.log(r + d0)

    def local_slope(self, r, d0):
        """d rho_r / d d0; the tight local Lipschitz factor of the gauge."""
        self._check_r(r)
        d0 = np.asarray(d0, dtype=float)
        if self.rho_tag == "identity":
            return np.ones_like(d0)
        if self.rho_tag == "power-shift":
            return self.delta * (1.0 + r + d0) ** (self.delta - 1.0)
        return 1.0 / (r + d0)

    def increment_bound(self, r, d0x, d0y, d):
        """Analytic upper bound for |rho_r(x) - rho_r(y)| given d(x,y)."""
        self._check_r(r)
        d = np.asarray(d, dtype=float)
        if self.rho_tag == "identity":
            return d
        lo = np.minimum(d0x, d0y)
        if self.rho_tag == "power-shift":
            return self.delta * d / (1.0 + r + lo) ** (1.0 - self.delta)
        return d / (r + lo)

    def threshold(self, r, d0x, d0y):
        """Jump-height threshold F_r(x,y); symmetric and increasing in r."""
        self._check_r(r)
        if self.f_tag == "constant":
            hi = np.maximum(np.asarray(d0x, dtype=float), d0y)
            return np.full_like(hi, float(r))
        hi = np.maximum(d0x, d0y)
        if self.f_tag == "power-max":
            return self.c_star * (r + hi) ** (1.0 - self.delta)
        return self.c_star * (r + hi)

    def small_jump_reach(self, r, d0x) -> float:
        """Largest distance from x at which a jump can still be small.

        Solves D = F_r at the worst-case far endpoint d0y = d0x + D; beyond
        the returned value every jump is big regardless of the endpoint.
        """
        self._check_r(r)
        if self.f_tag == "constant":
            return float(r)
        if self.f_tag == "linear-max":
            return self.c_star * (r + d0x) / (1.0 - self.c_star)
        D = 0.0
        for _ in range(100):
            nxt = self.c_star * (r + d0x + D) ** (1.0 - self.delta)
            if abs(nxt - D) < 1e-12 * (1.0 + nxt):
                return float(nxt)
            D = nxt
        return float(D)

    def sublevel_radius(self, r, R) -> float:
        """Largest d0 with rho_r(d0) <= R (0 if the sublevel set is empty)."""
        self._check_r(r)
        if self.rho_tag == "identity":
            return max(0.0, float(R))
        if self.rho_tag == "power-shift":
            if R <= 0:
                return 0.0
            return max(0.0, R ** (1.0 / self.delta) - 1.0 - r)
        return max(0.0, math.exp(R) - r)

    def sublevel_mask(self, space, r, R):
        return self.rho(r, space.d0) <= R

    def rho_range(self, r, d0_max):
        """Values of rho_r at the base point and at gauge distance d0_max."""
        lo = float(self.rho(r, np.asarray(0.0)))
        hi = float(self.rho(r, np.asarray(d0_max)))
        return lo, hi


def sublevel_volume(gauge: AdaptedGauge, r, R, medium, weights=None) -> float:
    """Selected-measure mass of {rho_r <= R} on a sampled space or profile.

    `weights` replaces the space's raw masses (tilted or time-changed
    measures); profiles only support the base measure.
    """
    if R <= 0:
        raise ValueError("level R must be positive")
    if hasattr(medium, "volume"):  # RadialProfile
        if weights is not None:
            raise ValueError("weighted sublevel mass needs a sampled space")
        return medium.volume(gauge.sublevel_radius(r, R))
    mask = gauge.sublevel_mask(medium, r, R)
    w = medium.mass if weights is None else weights
    return float(w[mask].sum())


def complement_volume(gauge: AdaptedGauge, r, R, medium, weights=None) -> float:
    """Selected-measure mass of the complement {rho_r > R}."""
    if hasattr(medium, "volume"):
        total = medium.total_volume
        if not math.isfinite(total):
            raise ValueError("complement mass needs a finite-volume profile")
        return total - sublevel_volume(gauge, r, R, medium)
    mask = gauge.sublevel_mask(medium, r, R)
    w = medium.mass if weights is None else weights
    return float(w[~mask].sum())
