"""Exchangeable-pair couplings for multivariate normal approximation.

The package estimates the linear-regression structure of a coupling, checks
the identities it implies, assembles the explicit smooth- and non-smooth
error bounds, and verifies everything against exact enumeration oracles and
seeded Monte Carlo on a zoo of worked models (circular run counts, i.i.d.
vector sums, double-indexed permutation statistics, and a non-exchangeable
spin-chain counterexample).
"""

from .bounds import (BoundReport, NonSmoothReport, nonsmooth_class_bound,
                     lambda_weights, triangular_weight_cap, covariance_comparison_bound,
                     smooth_function_bound, univariate_remainder_bound)
from .distance import (HalfSpaceIndicator, SteinSolution, TestFunction, battery,
                       distance_estimate, psi_t, smooth_h, stein_residual,
                       stein_solve)
from .estimators import (Estimate, cond_variance, cond_variance_by_statistic,
                         third_abs_moment, var_R)
from .linalg import CovarianceModel, invert, norms, psd_sqrt
from .pairs import (EmbeddingSplit, LinearityFit, PairModel, PairSample,
                    check_antisymmetry, embed_split, estimate_linearity,
                    moment_swap_test, sample_pairs, sigma_tilde,
                    standardized_model, step_covariance)
from .permutations import (hoeffding_variance, mww_tensor, perm_drift,
                           perm_lambda, perm_pair_model, perm_remainder,
                           perm_stats, perm_step)
from .runs import (RunsConfig, runs_bound_analytic, runs_cross_moment,
                   runs_drift, runs_lambda, runs_pair_model, runs_sigma,
                   runs_statistic, runs_step)
from .zoo import (IidSumConfig, SpinChainConfig, iid_bound, iid_pair,
                  spin_chain_lambda, spin_chain_step, spin_equilibrium,
                  spin_sum_pair)

__version__ = "0.1.0"

__all__ = [
    "BoundReport", "NonSmoothReport", "nonsmooth_class_bound", "lambda_weights",
    "triangular_weight_cap", "covariance_comparison_bound", "smooth_function_bound", "univariate_remainder_bound",
    "HalfSpaceIndicator", "SteinSolution", "TestFunction", "battery",
    "distance_estimate", "psi_t", "smooth_h", "stein_residual", "stein_solve",
    "Estimate", "cond_variance", "cond_variance_by_statistic",
    "third_abs_moment", "var_R",
    "CovarianceModel", "invert", "norms", "psd_sqrt",
    "EmbeddingSplit", "LinearityFit", "PairModel", "PairSample",
    "check_antisymmetry", "embed_split", "estimate_linearity",
    "moment_swap_test", "sample_pairs", "sigma_tilde", "standardized_model",
    "step_covariance",
    "hoeffding_variance", "mww_tensor", "perm_drift", "perm_lambda",
    "perm_pair_model", "perm_remainder", "perm_stats", "perm_step",
    "RunsConfig", "runs_bound_analytic", "runs_cross_moment", "runs_drift",
    "runs_lambda", "runs_pair_model", "runs_sigma", "runs_statistic",
    "runs_step",
    "IidSumConfig", "SpinChainConfig", "iid_bound", "iid_pair",
    "spin_chain_lambda", "spin_chain_step", "spin_equilibrium", "spin_sum_pair",
]
