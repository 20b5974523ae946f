"""Numerical upper bounds for the bottom of the essential spectrum of
non-local Dirichlet form generators, from volume growth and big-jump rates,
validated against discretized-operator oracles."""

from .bounds import (BoundReport, GrowthEstimate, JumpMoments,
                     LyapunovCertificate, compute_moments,
                     compute_moments_radial, core_indices, estimate_mu,
                     estimate_nu, lyapunov_lower_bound, optimize_bound)
from .discrete import (DiscreteForm, PhiProfile, TestFunction, assemble,
                       build_test_function, lemma33_check, persson_exterior_lambda,
                       persson_ladder, rayleigh, weak_overlap)
from .gauges import AdaptedGauge, complement_volume, sublevel_volume
from .kernels import (CoeffGrowthKernel, CoefficientField, ExpTiltedKernel,
                      FractionalKernel, HyperbolicKernel, Potential,
                      TiltedKernel, TimeChangeKernel, TimeChangeWeight,
                      TwoRegimeKernel, big_jump_mass, eval_kernel,
                      kernel_from_config)
from .reports import emit_report, report_to_json_bytes
from .scenarios import (ScenarioConfig, build_gauge, build_kernel_and_measure,
                        build_profile, build_space, expected_regime,
                        run_scenario, validate_config)
from .spaces import (Ball, RadialProfile, SampledSpace, ball_volume,
                     make_cloud_space, make_exponential_tree_space,
                     make_lattice_space)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
