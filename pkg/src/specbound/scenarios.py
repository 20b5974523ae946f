"""Scenario registry and runner: binds spaces, kernels, gauges, moments and
oracles into named experiments with expected-regime comparison."""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import bounds as bnd
from . import discrete as dsc
from .gauges import AdaptedGauge
from .kernels import (Potential, TiltedKernel, TimeChangeKernel,
                      TimeChangeWeight, kernel_from_config)
from .spaces import (RadialProfile, SampledSpace, make_exponential_tree_space,
                     make_lattice_space)

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

SCENARIOS = ("polynomial", "exponential", "coeffgrowth", "timechange",
             "outype", "custom")


@dataclass
class ScenarioConfig:
    scenario: str
    seed: int = 1234
    recurrent: bool = False
    run_oracles: bool = True
    space: dict = field(default_factory=dict)
    growth: dict = field(default_factory=dict)       # separate growth medium
    kernel: dict = field(default_factory=dict)
    gauge: dict = field(default_factory=dict)
    grids: dict = field(default_factory=dict)
    oracle: dict = field(default_factory=dict)
    lyapunov: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    @staticmethod
    def from_dict(raw) -> "ScenarioConfig":
        known = {f for f in ScenarioConfig.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return ScenarioConfig(**raw)

    @staticmethod
    def from_toml(path) -> "ScenarioConfig":
        with open(path, "rb") as fh:
            return ScenarioConfig.from_dict(tomllib.load(fh))

    def echo(self) -> dict:
        return {
            "scenario": self.scenario, "seed": self.seed,
            "recurrent": self.recurrent, "run_oracles": self.run_oracles,
            "space": self.space, "growth": self.growth, "kernel": self.kernel,
            "gauge": self.gauge, "grids": self.grids, "oracle": self.oracle,
            "lyapunov": self.lyapunov,
        }


def validate_config(config: ScenarioConfig) -> list:
    """Named constraint violations (empty when the config is runnable)."""
    problems = []
    if config.scenario not in SCENARIOS:
        problems.append(f"scenario: unknown name {config.scenario!r}")
    k = config.kernel
    fam = k.get("family")
    if fam == "coeff-growth":
        p, q, beta = k.get("p", 0.0), k.get("q", 0.0), k.get("beta", 1.0)
        if not 0 <= p <= 2:
            problems.append("kernel.p: needs p in [0, 2]")
        if not 0 <= q < 2:
            problems.append("kernel.q: needs q in [0, 2)")
        if not q < beta < 2:
            problems.append("kernel.beta: needs q < beta < 2")
    if fam == "exp-tilted":
        if k.get("lam", 0.0) <= 0:
            problems.append("kernel.lam: must be positive")
        if not 0 < k.get("beta1", 1.0) < 2:
            problems.append("kernel.beta1: needs beta1 in (0, 2)")
        kappa = config.growth.get("kappa")
        if kappa is not None and k.get("lam", 0.0) < kappa - 1e-12:
            problems.append("kernel.lam: tail rate below the volume growth rate "
                            "makes the big-jump rate diverge (needs lam >= kappa)")
    if fam == "fractional" and not 0 < k.get("alpha", 1.0) < 2:
        problems.append("kernel.alpha: needs alpha in (0, 2)")
    if "tilt" in k:
        pot = _build_potential(k["tilt"])
        ratio_delta = k["tilt"].get("ratio_delta")
        ratio_c2 = k["tilt"].get("ratio_c2")
        if ratio_delta is None or ratio_c2 is None:
            problems.append("kernel.tilt: ratio_delta and ratio_c2 are required")
        elif not pot.certify_ratio(ratio_delta, ratio_c2):
            problems.append("kernel.tilt: potential fails the doubling-type "
                            "ratio condition on the test grid")
    if "timechange" in k and k["timechange"].get("p", 0.0) <= 0:
        problems.append("kernel.timechange.p: must be positive")
    if config.scenario == "outype" and "tilt" not in k:
        problems.append("kernel.tilt: outype runs need a certified potential")
    g = config.gauge
    if g.get("rho", "identity") == "power-shift" or g.get("F") == "power-max":
        d = g.get("delta")
        if d is not None and not 0 < d < 1:
            problems.append("gauge.delta: needs delta in (0, 1)")
    c = g.get("c_star", 0.5)
    if not 0 < c < 1:
        problems.append("gauge.c_star: needs c_star in (0, 1)")
    if config.recurrent is not True and _expects_finite_volume(config):
        problems.append("recurrent: this scenario uses the finite-volume bound "
                        "and needs the user-asserted recurrent flag")
    return problems


def _expects_finite_volume(config) -> bool:
    return bool(config.recurrent)


def _build_potential(spec) -> Potential:
    kind = spec.get("kind", "log_power")
    if kind == "power":
        return Potential.power(spec["a"], spec["gamma"])
    if kind == "log_power":
        return Potential.log_power(spec["theta"], spec.get("loglog_coeff", 0.0))
    if kind == "custom":
        return Potential.custom(spec["radii"], spec["values"])
    raise ValueError(f"unknown potential kind {kind!r}")


def build_space(spec) -> SampledSpace:
    stype = spec.get("type", "lattice1d")
    if stype == "lattice1d":
        return make_lattice_space(1, spec["extent"], spec["spacing"])
    if stype == "lattice2d":
        return make_lattice_space(2, spec["extent"], spec["spacing"])
    if stype == "tree":
        return make_exponential_tree_space(spec.get("branching", 2),
                                           spec["depth"],
                                           spec.get("edge_length", 1.0))
    raise ValueError(f"unknown space type {stype!r}")


def build_profile(spec) -> RadialProfile:
    kind = spec["kind"]
    if kind == "polynomial":
        return RadialProfile.polynomial(spec.get("c1", 1.0), spec["eta"])
    if kind == "two-regime":
        return RadialProfile.two_regime(spec.get("c1", 1.0), spec["eta"],
                                        spec["kappa"], spec.get("c2"))
    if kind == "exponential":
        return RadialProfile.exponential(spec.get("c", 1.0), spec["kappa"])
    if kind == "hyperbolic":
        return RadialProfile.hyperbolic(spec["n"])
    raise ValueError(f"unknown profile kind {kind!r}")


def build_kernel_and_measure(config, space):
    """Kernel (with tilt/time-change wrappers) and the L2 measure weights."""
    spec = dict(config.kernel)
    tilt = spec.pop("tilt", None)
    timechange = spec.pop("timechange", None)
    family = spec.pop("family")
    kernel = kernel_from_config(family, spec)
    weights = space.mass.copy()
    if tilt is not None and timechange is not None:
        raise ValueError("tilt and timechange are mutually exclusive")
    if tilt is not None:
        pot = _build_potential(tilt)
        if not pot.certify_ratio(tilt["ratio_delta"], tilt["ratio_c2"]):
            raise ValueError("potential fails the ratio condition; "
                             "run `check` for details")
        kernel = TiltedKernel(kernel, pot)
        weights = space.mass * np.exp(-pot.value(space.d0))
    elif timechange is not None:
        w = TimeChangeWeight(timechange["p"])
        kernel = TimeChangeKernel(kernel, w)
        weights = space.mass / w.value(space.d0)
    return kernel, weights


def build_gauge(config) -> AdaptedGauge:
    g = dict(config.gauge)
    rho = g.get("rho", "identity")
    ftag = g.get("F", "constant")
    delta = g.get("delta")
    if delta is None and (rho == "power-shift" or ftag == "power-max"):
        delta = _auto_delta(config)
    return AdaptedGauge(rho_tag=rho, f_tag=ftag, delta=delta,
                        c_star=g.get("c_star", 0.5),
                        gamma_sup=g.get("gamma_sup", 0.0))


def _auto_delta(config) -> float:
    """Half the largest exponent satisfying the strict domain inequalities."""
    k = config.kernel
    if k.get("family") == "coeff-growth":
        p, q, beta = k["p"], k["q"], k["beta"]
        return min((2.0 - p) / 2.0, (beta - q) / beta) / 2.0
    if "timechange" in k:
        p = k["timechange"]["p"]
        beta = k.get("alpha", k.get("beta", 1.0))
        return (1.0 - p / beta) / 2.0
    return 0.25


def usable_scale(space, gauge) -> float:
    """Largest r whose small-jump reach from the base point still fits."""
    target = space.radius / 2.0
    lo, hi = 1e-6, space.radius
    if gauge.small_jump_reach(hi, 0.0) <= target:
        return min(hi, target * 2.0) / 1.0 if gauge.f_tag != "constant" else target
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if gauge.small_jump_reach(mid, 0.0) <= target:
            lo = mid
        else:
            hi = mid
    return lo


def default_r_grid(space, gauge, grids) -> np.ndarray:
    points = int(grids.get("r_points", 32))
    hi = grids.get("r_hi")
    lo = grids.get("r_lo")
    if hi is None:
        hi = 0.8 * min(usable_scale(space, gauge), space.radius / 2.0)
    if lo is None:
        spacing = space.spacing if space.kind == "lattice" else space.edge_length
        lo = max(4.0 * spacing, hi / 100.0)
    if gauge.rho_tag == "log-shift":
        lo = max(lo, 1.0)
    if not lo < hi:
        raise ValueError(f"empty r-grid: lo={lo}, hi={hi}")
    return np.exp(np.linspace(math.log(lo), math.log(hi), points))


def growth_R_grid(gauge, r, medium, grids, finite_volume):
    points = int(grids.get("R_points", 16))
    if hasattr(medium, "volume"):  # profile: no truncation, take a wide window
        hi = float(grids.get("R_hi", 40.0))
        lo = float(grids.get("R_lo", hi / 4.0))
    else:
        top_frac = 0.8 if finite_volume else 0.85
        lo_val = gauge.rho(r, np.asarray(0.15 * medium.radius))
        hi_val = gauge.rho(r, np.asarray(top_frac * medium.radius))
        lo, hi = float(lo_val), float(hi_val)
    eps = 1e-9 * max(1.0, abs(hi))
    if not lo < hi - eps:
        raise ValueError("gauge range too narrow for a growth window")
    lo = max(lo, 1e-6)
    return np.linspace(lo, hi, points)


def expected_regime(config: ScenarioConfig):
    """(verdict, regime description) from the scenario registry; None for custom."""
    name = config.scenario
    k = config.kernel
    if name == "polynomial":
        return "zero", "polynomial volume growth"
    if name == "exponential":
        return "finite", "exponential volume growth, critically damped tail"
    if name == "coeffgrowth":
        p = k.get("p", 0.0)
        if p < 2.0:
            return "zero", "subcritical coefficient growth in the jump kernel"
        return "finite", "critical quadratic coefficient growth"
    if name == "timechange":
        p = k.get("timechange", {}).get("p", 0.0)
        beta = k.get("alpha", k.get("beta", 1.0))
        eta = k.get("eta", 1.0)
        if p < beta and p <= eta:
            return "zero", "subcritical time change"
        if math.isclose(p, beta) and p < eta:
            return "finite", "critical time change, infinite measure"
        if math.isclose(p, beta) and p > eta:
            return "finite", "critical time change, finite measure"
        if p < beta and p > eta:
            return "zero", "subcritical time change, finite measure"
        return None, "time change (unclassified parameters)"
    if name == "outype":
        tilt = k.get("tilt", {})
        eta = k.get("eta", 1.0)
        beta = k.get("alpha", k.get("beta", 1.0))
        pot = _build_potential(tilt)
        probe = np.array([1e4, 1e6, 1e8])
        vals = probe ** -(eta + beta) * np.exp(pot.value(probe))
        if vals[-1] < 0.5 * vals[0] and vals[-1] < 1e-1:
            return "zero", "tilted operator with vanishing big-jump tail"
        if vals[-1] <= 2.0 * vals[0]:
            return "finite", "tilted operator with bounded big-jump tail"
        return None, "tilted operator (growing tail; upper bound uninformative)"
    return None, "custom scenario"


@dataclass
class RunReport:
    config: dict
    expected_verdict: str | None
    regime: str
    bound: bnd.BoundReport
    oracle: dict
    lemma: dict
    notes: list

    @property
    def verdict_match(self):
        if self.expected_verdict is None:
            return None
        return self.bound.verdict == self.expected_verdict

    def to_dict(self):
        return {
            "config": self.config,
            "expected_verdict": self.expected_verdict,
            "regime": self.regime,
            "verdict_match": self.verdict_match,
            "bound": self.bound.to_dict(),
            "oracle": self.oracle,
            "lemma": self.lemma,
            "notes": self.notes,
        }


def _growth_for(config, gauge, r, medium, weights, grids, finite_volume):
    R_grid = growth_R_grid(gauge, r, medium, grids, finite_volume)
    w = None if hasattr(medium, "volume") else weights
    if finite_volume:
        return bnd.estimate_nu(medium, gauge, r, R_grid, weights=w)
    return bnd.estimate_mu(medium, gauge, r, R_grid, weights=w)


def run_scenario(config: ScenarioConfig, threads=1) -> RunReport:
    problems = validate_config(config)
    if problems:
        raise ValueError("invalid config: " + "; ".join(problems))
    notes = []
    space = build_space(config.space)
    kernel, weights = build_kernel_and_measure(config, space)
    gauge = build_gauge(config)
    finite_volume = bool(config.recurrent)
    theorem = "finite-volume" if finite_volume else "infinite-volume"

    if config.growth:
        growth_medium = build_profile(config.growth)
        growth_weights = None
    else:
        growth_medium, growth_weights = space, weights

    backend = config.grids.get("moments_backend", "discrete")
    r_grid = default_r_grid(space, gauge, config.grids)

    envelope = kernel.radial_envelope() if backend == "radial" else None
    if backend == "radial" and envelope is None:
        raise ValueError("the radial moments backend needs a radial kernel family")

    curve, growths = [], []
    r_dependent_gauge = gauge.rho_tag != "identity"
    shared_growth = None
    for r in r_grid:
        if shared_growth is None or r_dependent_gauge:
            shared_growth = _growth_for(config, gauge, r, growth_medium,
                                        growth_weights, config.grids, finite_volume)
        growths.append(shared_growth)
        if backend == "radial":
            curve.append(bnd.compute_moments_radial(growth_medium, envelope, gauge, r))
        else:
            curve.append(bnd.compute_moments(space, kernel, gauge, r, threads=threads))
    report = bnd.optimize_bound(growths, curve, theorem=theorem,
                                recurrent=config.recurrent)

    expected, regime = expected_regime(config)
    oracle, lemma = {}, {}
    if config.run_oracles:
        oracle, lemma = run_oracles(config, space, kernel, weights, gauge,
                                    r_grid, curve, growths, report, notes,
                                    threads=threads)
    return RunReport(config.echo(), expected, regime, report, oracle, lemma, notes)


def run_oracles(config, space, kernel, weights, gauge, r_grid, curve, growths,
                report, notes, threads=1):
    ocfg = config.oracle
    cutoff = ocfg.get("cutoff", min(space.radius, 12.0))
    form = dsc.assemble(space, kernel, xweights=weights, cutoff=cutoff,
                        budget_mb=ocfg.get("budget_mb", 1024))

    radii = ocfg.get("r0_ladder", [2.0, 4.0, 8.0])
    ladder = dsc.persson_ladder(form, radii, seed=config.seed)
    persson_top = ladder[-1][1]

    # test-function battery at a scale where the gauge window is widest
    lemma_r = float(r_grid[0]) if gauge.rho_tag != "identity" else report.best_r
    li = int(np.argmin(np.abs(r_grid - lemma_r)))
    lemma_growth, lemma_moments = growths[li], curve[li]
    if config.grids.get("moments_backend", "discrete") == "radial":
        # the integrated inequality must be checked against the assembled
        # form's own discrete suprema, not the model profile
        lemma_moments = bnd.compute_moments(space, kernel, gauge, lemma_r,
                                            threads=threads)
    rho_top_frac = 0.8 if config.recurrent else 0.85
    R_top = float(gauge.rho(lemma_r, np.asarray(rho_top_frac * space.radius)))
    alpha = ocfg.get("alpha") or max(1.1 * lemma_growth.value / 2.0, 8.0 / R_top)
    variant = "finite-volume" if config.recurrent else "infinite-volume"
    rho_min = float(gauge.rho(lemma_r, np.asarray(0.0)))
    fracs = ocfg.get("rn_fracs", [0.4, 0.6, 0.8, 1.0])
    rungs = [f * R_top for f in fracs]
    if variant == "infinite-volume":
        rungs = [R for R in rungs if R > rho_min * 1.05] or [R_top]

    probe = np.zeros(space.n)
    probe[space.origin] = 1.0
    ladder_rows, lemma_rows = [], []
    for R_n in rungs:
        tf = dsc.build_test_function(variant, gauge, lemma_r, alpha, R_n, space,
                                     growth=lemma_growth.value)
        rep = dsc.lemma33_check(form, tf, lemma_moments, alpha)
        quot = dsc.rayleigh(form, tf.f)
        overlap = dsc.weak_overlap(form, probe, tf)
        ladder_rows.append({"R_n": R_n, "rayleigh": quot, "overlap": overlap})
        lemma_rows.append(rep.to_dict() | {"R_n": R_n})

    oracle = {
        "cutoff": cutoff,
        "dropped_mass_bound": form.dropped_mass_bound,
        "persson_ladder": [[r0, lam] for r0, lam in ladder],
        "persson_top": persson_top,
        "rayleigh_ladder": ladder_rows,
        "alpha": alpha,
        "ordering": {
            "persson_le_bound": persson_top <= report.best_bound * 1.05,
            "rayleigh_ge_persson": ladder_rows[-1]["rayleigh"] >= persson_top - 1e-9,
        },
    }
    report.oracles = {"persson_top": persson_top,
                      "rayleigh_top": ladder_rows[-1]["rayleigh"]}

    if config.lyapunov:
        lcfg = config.lyapunov
        cert = bnd.lyapunov_lower_bound(
            space, lcfg["alpha"], p=lcfg.get("p"),
            delta_grid=tuple(lcfg.get("delta_grid", (0.25, 0.3, 0.35, 0.4, 0.45))),
            r0=lcfg.get("r0", 6.0), x_max=lcfg.get("x_max"),
            x_points=lcfg.get("x_points", 40))
        if cert is None:
            notes.append("lyapunov: no grid delta certified a positive bound")
            oracle["lyapunov"] = None
        else:
            pl = dsc.persson_exterior_lambda(form, cert.r0, seed=config.seed)
            oracle["lyapunov"] = cert.to_dict() | {
                "persson_at_r0": pl,
                "persson_ge_half_certificate": pl >= 0.5 * cert.value,
            }

    lemma = {"r": lemma_r, "moments": {"m1": lemma_moments.m1, "m2": lemma_moments.m2},
             "rungs": lemma_rows}
    return oracle, lemma
