"""Assembly of the explicit normal-approximation error bounds.

The smooth-test-function bound combines three coupling moments A, B, C with
weights built from the inverse regression matrix; the non-smooth variant
rebalances the same ingredients through a smoothing parameter.  Two unknown
dimensional constants enter the non-smooth bound; they are configuration
parameters defaulting to 1 and every report carries that caveat.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (DegenerateBoundError, NotPSDError, NotTriangularError,
                     ZeroDiagonalError)
from .estimators import Estimate
from .linalg import check_symmetric, invert

UNKNOWN_CONSTANT_CAVEAT = (
    "dimensional constants gamma(d) and c0 are not known explicitly; "
    "values computed with user-supplied defaults (1.0)"
)


def lambda_weights(lam) -> np.ndarray:
    """Column-wise absolute sums of the inverse regression matrix."""
    lam_inv = invert(np.asarray(lam, dtype=float))
    return np.abs(lam_inv).sum(axis=0)


@dataclass(frozen=True)
class BoundReport:
    """Smooth-test-function bound: ingredients, weights and the total."""

    lambda_weights: np.ndarray
    A: float
    B: float
    C: float
    A_se: float
    B_se: float
    C_se: float
    h_norms: tuple[float, float, float]
    sigma_maxabs: float
    dim: int
    total: float = field(init=False)
    total_se: float = field(init=False)
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "total", self.recompute_total())
        h1, h2, h3 = self.h_norms
        c_coeff = h1 + 0.5 * self.dim * math.sqrt(self.sigma_maxabs) * h2
        se = h2 / 4.0 * self.A_se + h3 / 12.0 * self.B_se + c_coeff * self.C_se
        object.__setattr__(self, "total_se", se)

    def recompute_total(self) -> float:
        h1, h2, h3 = self.h_norms
        c_coeff = h1 + 0.5 * self.dim * math.sqrt(self.sigma_maxabs) * h2
        return h2 / 4.0 * self.A + h3 / 12.0 * self.B + c_coeff * self.C


def smooth_function_bound(A: Estimate, B: Estimate, C: Estimate, h_norms, sigma,
                    lam_weights=None, provenance=None) -> BoundReport:
    """Assemble the smooth-function bound from its three moment ingredients.

    ``A``, ``B``, ``C`` are the already-weighted sums (conditional-variance
    term, absolute third-moment term, remainder term).  The covariance norm
    entering the C coefficient is the max-abs entry norm.
    """
    sigma = check_symmetric(sigma)
    d = sigma.shape[0]
    for name, est in (("A", A), ("B", B), ("C", C)):
        if est.value < 0:
            raise ValueError(f"{name} must be nonnegative, got {est.value}")
    return BoundReport(
        lambda_weights=np.asarray(lam_weights, dtype=float)
        if lam_weights is not None else np.full(d, np.nan),
        A=A.value, B=B.value, C=C.value,
        A_se=A.std_error, B_se=B.std_error, C_se=C.std_error,
        h_norms=tuple(float(v) for v in h_norms),
        sigma_maxabs=float(np.abs(sigma).max()),
        dim=d,
        provenance=dict(provenance or {}),
    )


@dataclass(frozen=True)
class NonSmoothReport:
    """Bound for indicator-type test classes, up to the unknown constant."""

    A_prime: float
    B_prime: float
    C_prime: float
    a: float
    gamma_d: float
    dim: int
    D_prime: float = field(init=False)
    T_prime: float = field(init=False)
    total: float = field(init=False)
    t_prime_ge_one: bool = field(init=False)
    caveat: str = UNKNOWN_CONSTANT_CAVEAT

    def __post_init__(self):
        D = self.A_prime / 2.0 + self.C_prime * self.dim
        T = (D + math.sqrt(self.a * self.B_prime / 2.0 + D * D)) ** 2 / self.a ** 2
        object.__setattr__(self, "D_prime", D)
        object.__setattr__(self, "T_prime", T)
        if T == 0.0:
            raise DegenerateBoundError("smoothing parameter T' is zero")
        # for T' >= 1 the -D' log T' term turns negative; reported as-is, flagged
        object.__setattr__(self, "t_prime_ge_one", T >= 1.0)
        total = self.gamma_d ** 2 * (
            -D * math.log(T) + self.B_prime / (2.0 * math.sqrt(T))
            + self.C_prime + self.a * math.sqrt(T))
        object.__setattr__(self, "total", total)


def nonsmooth_class_bound(A_prime: float, B_prime: float, C_prime: float, a: float,
                      d: int, gamma_d: float = 1.0) -> NonSmoothReport:
    """Non-smooth-class bound from the standardized moment ingredients."""
    if a < 1.0:
        raise ValueError(f"the class constant a must be >= 1, got {a}")
    for name, v in (("A'", A_prime), ("B'", B_prime), ("C'", C_prime)):
        if v < 0:
            raise ValueError(f"{name} must be nonnegative, got {v}")
    return NonSmoothReport(A_prime, B_prime, C_prime, float(a), float(gamma_d), int(d))


def covariance_comparison_bound(sigma, sigma0, h2: float) -> float:
    """Distance between two centered normals with 2-smooth test functions.

    ``sigma0`` may be singular; it only needs to be PSD.
    """
    sigma = check_symmetric(sigma)
    sigma0 = check_symmetric(sigma0)
    vals = np.linalg.eigvalsh(sigma0)
    tol = 1e-10 * max(np.trace(sigma0), 1.0) / sigma0.shape[0]
    if vals.min() < -tol:
        raise NotPSDError(f"comparison covariance has eigenvalue {vals.min():.3e}")
    return 0.5 * float(h2) * float(np.abs(sigma - sigma0).sum())


def univariate_remainder_bound(lam: float, var_cond_sq: float, abs_third: float,
                        var_remainder: float) -> float:
    """Kolmogorov-distance bound for the univariate remainder formulation."""
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    for name, v in (("var_cond_sq", var_cond_sq), ("abs_third", abs_third),
                    ("var_remainder", var_remainder)):
        if v < 0:
            raise ValueError(f"{name} must be nonnegative, got {v}")
    return (6.0 / lam * math.sqrt(var_cond_sq)
            + 6.0 / math.sqrt(lam) * math.sqrt(abs_third)
            + 19.0 / lam * math.sqrt(var_remainder))


def triangular_weight_cap(lam, a: float) -> float:
    """Closed-form cap on the inverse-column weights of a triangular matrix.

    Requires ``lam`` lower triangular with off-diagonal magnitudes at most
    ``a`` and nonzero diagonal; returns ``(a/g + 1)^(d-1) / g`` where ``g``
    is the smallest absolute diagonal entry.
    """
    lam = np.asarray(lam, dtype=float)
    d = lam.shape[0]
    if np.abs(np.triu(lam, k=1)).max(initial=0.0) > 0.0:
        raise NotTriangularError("matrix has nonzero entries above the diagonal")
    gamma = float(np.abs(np.diag(lam)).min())
    if gamma <= 0.0:
        raise ZeroDiagonalError("triangular matrix has a zero diagonal entry")
    off = np.abs(np.tril(lam, k=-1)).max(initial=0.0)
    if off > a * (1 + 1e-12):
        raise ValueError(f"off-diagonal magnitude {off} exceeds the stated cap {a}")
    return (a / gamma + 1.0) ** (d - 1) / gamma
