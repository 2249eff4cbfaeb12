"""Statistical engines for the bound ingredients.

Each estimator has an exact-enumeration backend (used automatically whenever
the model's fine configuration space is small enough) and a seeded Monte
Carlo backend with batch-means standard errors.

Conditioning is on the *fine* configuration, i.e. everything except the
step's own randomness.  By Jensen's inequality the resulting variance is an
upper bound for the variance conditioned on the statistic alone; reports
label it as a surrogate.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NoFineConditionalError
from .pairs import LinearityFit, PairModel
from .util import batch_means_se, chunk_generators

ENUM_CUTOFF = 1 << 20
EXACT = "exact_enumeration"
MONTE_CARLO = "monte_carlo"


@dataclass(frozen=True)
class Estimate:
    """A scalar estimate; ``std_error`` is zero iff it is exact."""

    value: float
    std_error: float
    mode: str
    n_effective: int

    def __post_init__(self):
        if self.mode not in (EXACT, MONTE_CARLO):
            raise ValueError(f"unknown mode {self.mode!r}")
        if (self.std_error == 0.0) != (self.mode == EXACT):
            raise ValueError("std_error must be zero exactly for enumeration results")


def _require_fine(model: PairModel):
    if model.fine_profile is None:
        raise NoFineConditionalError(
            f"model {model.name or '<anonymous>'} cannot average its step analytically")


def _can_enumerate(model: PairModel) -> bool:
    return (model.fine_enum is not None and model.fine_space_size is not None
            and model.fine_space_size <= ENUM_CUTOFF)


def cond_variance(model: PairModel, i: int, j: int, n: int, seed: int,
                  force_monte_carlo: bool = False) -> Estimate:
    """Variance over fine configurations of ``E[dW_i dW_j | fine]``.

    Exact when the fine configuration space has at most 2**20 elements,
    Monte Carlo with ``n`` samples otherwise.  Coordinates are 0-based.
    """
    _require_fine(model)
    if _can_enumerate(model) and not force_monte_carlo:
        mean = 0.0
        sq = 0.0
        total_p = 0.0
        count = 0
        for configs, probs in model.fine_enum():
            profile = np.asarray(model.fine_profile(configs), dtype=float)
            vals = (profile[:, :, i] * profile[:, :, j]).mean(axis=1)
            mean += float(probs @ vals)
            sq += float(probs @ vals ** 2)
            total_p += float(probs.sum())
            count += len(vals)
        if abs(total_p - 1.0) > 1e-9:
            raise ValueError(f"enumeration probabilities sum to {total_p!r}")
        return Estimate(max(sq - mean ** 2, 0.0), 0.0, EXACT, count)
    vals = _mc_fine_values(model, n, seed, lambda prof: prof[:, :, i] * prof[:, :, j])
    var = float(vals.var())
    # delta-method SE for the variance of a bounded statistic via batch means
    centered = (vals - vals.mean()) ** 2
    return Estimate(var, _mc_se(centered), MONTE_CARLO, n)


def third_abs_moment(model: PairModel, i: int, j: int, k: int, n: int, seed: int,
                     force_monte_carlo: bool = False) -> Estimate:
    """``E |dW_i dW_j dW_k|``, exact by enumeration when feasible."""
    _require_fine(model)
    if _can_enumerate(model) and not force_monte_carlo:
        acc = 0.0
        total_p = 0.0
        count = 0
        for configs, probs in model.fine_enum():
            profile = np.asarray(model.fine_profile(configs), dtype=float)
            vals = np.abs(profile[:, :, i] * profile[:, :, j] * profile[:, :, k]).mean(axis=1)
            acc += float(probs @ vals)
            total_p += float(probs.sum())
            count += len(vals)
        if abs(total_p - 1.0) > 1e-9:
            raise ValueError(f"enumeration probabilities sum to {total_p!r}")
        return Estimate(acc, 0.0, EXACT, count)
    vals = _mc_fine_values(
        model, n, seed, lambda prof: np.abs(prof[:, :, i] * prof[:, :, j] * prof[:, :, k]))
    return Estimate(float(vals.mean()), _mc_se(vals), MONTE_CARLO, n)


def _mc_se(x: np.ndarray) -> float:
    """Batch-means SE, floored at the smallest positive float.

    A strictly zero std_error is the marker reserved for certified
    enumeration results; a Monte Carlo sample that happens to be constant
    reports the denormal floor instead.
    """
    se = batch_means_se(x)
    return se if se > 0.0 else float(np.nextafter(0.0, 1.0))


def _mc_fine_values(model: PairModel, n: int, seed: int, reducer) -> np.ndarray:
    if model.fine_sample is None:
        raise NoFineConditionalError("model has no fine-configuration sampler")
    parts = []
    for lo, hi, rng in chunk_generators(seed, n):
        configs = model.fine_sample(rng, hi - lo)
        profile = np.asarray(model.fine_profile(configs), dtype=float)
        parts.append(reducer(profile).mean(axis=1))
    return np.concatenate(parts)


def cond_variance_by_statistic(model: PairModel, i: int, j: int) -> Estimate:
    """Variance of ``E[dW_i dW_j | W]``, exact, by grouping the enumeration.

    The fine-conditioning surrogate of :func:`cond_variance` over-estimates
    this quantity (conditioning refines the sigma-algebra); exposing both
    quantifies the slack.  Requires an enumerable model with a
    ``fine_statistic`` hook.
    """
    _require_fine(model)
    if not _can_enumerate(model) or model.fine_statistic is None:
        raise NoFineConditionalError(
            "statistic-conditioned variance needs an enumerable model with a "
            "fine_statistic hook")
    groups: dict[bytes, list[float]] = {}
    count = 0
    for configs, probs in model.fine_enum():
        profile = np.asarray(model.fine_profile(configs), dtype=float)
        vals = (profile[:, :, i] * profile[:, :, j]).mean(axis=1)
        stats = np.round(np.asarray(model.fine_statistic(configs), dtype=float), 9)
        count += len(vals)
        for key_row, p, v in zip(stats, probs, vals):
            key = key_row.tobytes()
            acc = groups.setdefault(key, [0.0, 0.0])
            acc[0] += float(p)
            acc[1] += float(p * v)
    total_p = sum(acc[0] for acc in groups.values())
    if abs(total_p - 1.0) > 1e-9:
        raise ValueError(f"enumeration probabilities sum to {total_p!r}")
    mean = sum(acc[1] for acc in groups.values())
    second = sum(acc[1] ** 2 / acc[0] for acc in groups.values() if acc[0] > 0)
    return Estimate(max(second - mean ** 2, 0.0), 0.0, EXACT, count)


def var_R(fit: LinearityFit) -> np.ndarray:
    """Per-coordinate remainder variances with a small-sample correction.

    The fit stores population variances of the residuals; rescaling by
    ``n / (n - dim)`` accounts for the regression degrees of freedom (no
    correction when the fit was taken against a claimed matrix).
    """
    n = fit.n_samples
    d = fit.lambda_hat.shape[0]
    if fit.against_claimed or n <= d:
        return np.asarray(fit.r_var, dtype=float)
    return np.asarray(fit.r_var, dtype=float) * (n / (n - d))
