"""Numerical flatness, quasisymmetry and extension toolkit for sampled sets and maps."""
from . import errors
from .errors import *  # noqa: F401,F403
from .geometry import AffineMap, Plane, SampledSet, chebyshev_ball, fit_plane_minimax
from .flatness import (FlatnessProfile, beta, beta_fit, dini_beta_integral, dyadic_beta_sq_sum,
                       flatness_profile, theta)
from .quasisymmetry import (DistortionReport, SampledMap, carleson_qs_sum, dini_qs_integral,
                            fit_similarity, htilde_in_ball, weak_qs_constant)
from .families import (AffineFamily, IneqReport, T_eps, adapt_small_scales, check_almost_affine,
                       check_compatible, psi, random_compatible_family, stabilize_large_scales,
                       verify_inequality)
from .generators import PerturbedAffine, SnowflakeMap, radial_qc, similarity, snowflake_curve
from .whitney import (ExtensionEvaluator, WhitneyDecomposition, extend_family, extend_map,
                      whitney_decompose)
from .config import ExperimentConfig, GeneratorSpec, generate

__version__ = "0.1.0"

__all__ = errors.__all__ + [
    "AffineMap",
    "Plane",
    "SampledSet",
    "chebyshev_ball",
    "fit_plane_minimax",
    "FlatnessProfile",
    "beta",
    "beta_fit",
    "dini_beta_integral",
    "dyadic_beta_sq_sum",
    "flatness_profile",
    "theta",
    "DistortionReport",
    "SampledMap",
    "carleson_qs_sum",
    "dini_qs_integral",
    "fit_similarity",
    "htilde_in_ball",
    "weak_qs_constant",
    "AffineFamily",
    "IneqReport",
    "T_eps",
    "adapt_small_scales",
    "check_almost_affine",
    "check_compatible",
    "psi",
    "random_compatible_family",
    "stabilize_large_scales",
    "verify_inequality",
    "PerturbedAffine",
    "SnowflakeMap",
    "radial_qc",
    "similarity",
    "snowflake_curve",
    "ExtensionEvaluator",
    "WhitneyDecomposition",
    "extend_family",
    "extend_map",
    "whitney_decompose",
    "ExperimentConfig",
    "GeneratorSpec",
    "generate",
]
