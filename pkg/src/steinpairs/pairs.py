"""Exchangeable-pair couplings and the identities they satisfy.

A :class:`PairModel` packages an underlying-configuration sampler, the vector
statistic ``W``, the one-step resampling move, and (when available) the exact
conditional drift ``E[W' - W | config]``.  The operations here estimate the
linear-regression structure ``E[W' - W | W] = -L W + R``, test the
anti-symmetry and step-covariance identities that exchangeability implies,
and carry out the block bookkeeping used when a statistic needs auxiliary
coordinates to make the regression linear.
"""

from dataclasses import dataclass, replace
from typing import Any, Callable, Iterator, Optional

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateDesignError, SingularMatrixError
from .linalg import CovarianceModel, invert, symmetrize
from .util import DEFAULT_CHUNK, batch_means_se, chunk_generators


@dataclass(frozen=True)
class PairModel:
    """A coupling ``(W, W')`` built from a resamplable configuration.

    All callables are batched: ``sample_configs(rng, size)`` returns an
    opaque batch, ``statistic`` maps it to a ``(size, dim)`` array, ``step``
    applies one independent resampling move per row, and ``analytic_drift``
    (optional) returns ``E[W' - W | config]`` row-wise, averaging over the
    step's internal randomness.

    ``fine_profile`` (optional) returns a ``(size, K, dim)`` array listing
    the realized ``W' - W`` for the K equally likely outcomes of the step's
    randomness at each sampled fine configuration from ``fine_sample``; it
    powers the conditional-variance and third-moment estimators.
    ``fine_enum`` (optional) yields ``(configs, probabilities)`` batches
    covering the whole fine configuration space for exact enumeration.
    """

    dim: int
    sample_configs: Callable[[np.random.Generator, int], Any]
    statistic: Callable[[Any], np.ndarray]
    step: Callable[[Any, np.random.Generator], Any]
    analytic_drift: Optional[Callable[[Any], np.ndarray]] = None
    claimed_lambda: Optional[np.ndarray] = None
    claimed_sigma: Optional[np.ndarray] = None
    claimed_r_zero: bool = False
    exchangeable: bool = True
    name: str = ""
    fine_sample: Optional[Callable[[np.random.Generator, int], Any]] = None
    fine_profile: Optional[Callable[[Any], np.ndarray]] = None
    fine_enum: Optional[Callable[[], Iterator[tuple[Any, np.ndarray]]]] = None
    fine_space_size: Optional[int] = None
    fine_statistic: Optional[Callable[[Any], np.ndarray]] = None


@dataclass(frozen=True)
class PairSample:
    """Sampled pairs: ``w`` and ``w_prime`` are (n, dim); ``drift`` optional."""

    w: np.ndarray
    w_prime: np.ndarray
    drift: Optional[np.ndarray] = None


@dataclass(frozen=True)
class LinearityFit:
    """Least-squares estimate of the regression ``E[W'-W|W] = -L W + R``."""

    lambda_hat: np.ndarray
    r_mean: np.ndarray
    r_var: np.ndarray
    n_samples: int
    standard_errors: np.ndarray
    claimed_deviation: Optional[float] = None
    against_claimed: bool = False


@dataclass(frozen=True)
class EmbeddingSplit:
    """Block partition of the regression matrix for an l-dimensional margin."""

    l: int
    lambda_11: np.ndarray
    lambda_12: np.ndarray
    r_variance_estimate: float
    r_variances: np.ndarray


@dataclass(frozen=True)
class StepCovariance:
    """Empirical ``E (W'-W)(W'-W)^t`` and its two model predictions."""

    empirical: np.ndarray
    empirical_se: np.ndarray
    exchangeable_prediction: np.ndarray
    equal_dist_prediction: np.ndarray


@dataclass(frozen=True)
class SwapMoment:
    """A bivariate moment of (W, W') minus the same moment of (W', W)."""

    label: str
    value: float
    std_error: float

    @property
    def zscore(self) -> float:
        if self.std_error == 0.0:
            return 0.0 if self.value == 0.0 else float("inf")
        return self.value / self.std_error


def sample_pairs(model: PairModel, n: int, seed: int, with_drift: bool = False,
                 chunk: int = DEFAULT_CHUNK) -> PairSample:
    """Draw ``n`` coupled pairs (and the analytic drift when requested)."""
    ws, wps, drifts = [], [], []
    for lo, hi, rng in chunk_generators(seed, n, chunk):
        configs = model.sample_configs(rng, hi - lo)
        ws.append(np.asarray(model.statistic(configs), dtype=float))
        if with_drift and model.analytic_drift is not None:
            drifts.append(np.asarray(model.analytic_drift(configs), dtype=float))
        stepped = model.step(configs, rng)
        wps.append(np.asarray(model.statistic(stepped), dtype=float))
    return PairSample(
        w=np.concatenate(ws, axis=0),
        w_prime=np.concatenate(wps, axis=0),
        drift=np.concatenate(drifts, axis=0) if drifts else None,
    )


def _drift_samples(model: PairModel, rng: np.random.Generator, size: int,
                   inner: int) -> tuple[np.ndarray, np.ndarray]:
    """(W, drift) for a chunk; falls back to inner Monte Carlo for the drift."""
    configs = model.sample_configs(rng, size)
    w = np.asarray(model.statistic(configs), dtype=float)
    if model.analytic_drift is not None:
        return w, np.asarray(model.analytic_drift(configs), dtype=float)
    acc = np.zeros_like(w)
    for _ in range(inner):
        stepped = model.step(configs, rng)
        acc += np.asarray(model.statistic(stepped), dtype=float) - w
    return w, acc / inner


def estimate_linearity(model: PairModel, n: int, seed: int, inner: int = 64,
                       against_claimed: bool = False,
                       chunk: int = DEFAULT_CHUNK) -> LinearityFit:
    """Fit the regression matrix from sampled (W, drift) pairs.

    Regresses ``-drift`` on ``W`` by ordinary least squares (no intercept:
    the remainder has mean zero by construction).  With
    ``against_claimed=True`` the model's claimed matrix is used instead of
    the least-squares solution, so the residual statistics describe the
    remainder relative to the claimed regression.
    """
    d = model.dim
    if n < d + 1:
        raise ValueError(f"need at least dim+1 = {d + 1} samples, got {n}")
    ws, drifts = [], []
    for lo, hi, rng in chunk_generators(seed, n, chunk):
        w, dr = _drift_samples(model, rng, hi - lo, inner)
        ws.append(w)
        drifts.append(dr)
    W = np.concatenate(ws, axis=0)
    D = np.concatenate(drifts, axis=0)
    Y = -D
    gram = W.T @ W
    if against_claimed:
        # residuals against a fixed matrix need no design regularity
        if model.claimed_lambda is None:
            raise ValueError("model has no claimed regression matrix")
        lam = np.asarray(model.claimed_lambda, dtype=float)
        ses = np.zeros((d, d))
    else:
        cond = np.linalg.cond(gram)
        if not np.isfinite(cond) or cond > 1e12:
            raise DegenerateDesignError(f"Gram matrix condition {cond:.3e}")
        coef, *_ = np.linalg.lstsq(W, Y, rcond=None)
        lam = coef.T
    resid = Y - W @ lam.T          # resid = -R
    R = -resid
    if not against_claimed:
        dof = max(n - d, 1)
        sigma2 = (resid ** 2).sum(axis=0) / dof
        gram_inv = np.linalg.inv(gram)
        ses = np.sqrt(np.outer(sigma2, np.diag(gram_inv)))
    claimed_dev = None
    if model.claimed_lambda is not None:
        claimed_dev = float(np.abs(lam - np.asarray(model.claimed_lambda)).max())
    return LinearityFit(
        lambda_hat=lam,
        r_mean=R.mean(axis=0),
        r_var=R.var(axis=0),
        n_samples=n,
        standard_errors=ses,
        claimed_deviation=claimed_dev,
        against_claimed=against_claimed,
    )


def _resolve_lambda(model: PairModel, lam, n: int, seed: int) -> np.ndarray:
    if lam is not None:
        return np.asarray(lam, dtype=float)
    if model.claimed_lambda is not None:
        return np.asarray(model.claimed_lambda, dtype=float)
    return estimate_linearity(model, n, seed).lambda_hat


def check_antisymmetry(model: PairModel, grad_g: Callable[[np.ndarray], np.ndarray],
                       n: int, seed: int, lam=None) -> tuple[float, float]:
    """Monte Carlo mean and SE of the anti-symmetric pairing functional.

    ``F(w', w) = (w'-w)^t L^{-t} (grad g(w') + grad g(w)) / 2`` has mean zero
    for every exchangeable pair; a mean several SEs away from zero flags a
    coupling that is not exchangeable.
    """
    lam = _resolve_lambda(model, lam, n, seed)
    lam_inv_t = invert(lam).T
    vals = []
    for lo, hi, rng in chunk_generators(seed, n):
        configs = model.sample_configs(rng, hi - lo)
        w = np.asarray(model.statistic(configs), dtype=float)
        wp = np.asarray(model.statistic(model.step(configs, rng)), dtype=float)
        gsum = np.asarray(grad_g(wp), dtype=float) + np.asarray(grad_g(w), dtype=float)
        vals.append(0.5 * np.einsum("bi,ij,bj->b", wp - w, lam_inv_t, gsum))
    vals = np.concatenate(vals)
    return float(vals.mean()), batch_means_se(vals)


def step_covariance(model: PairModel, n: int, seed: int, lam=None,
                    sigma=None) -> StepCovariance:
    """Empirical step covariance with the two identity-based predictions.

    ``exchangeable_prediction`` is ``2 Sigma L^t - 2 E(W R^t)`` (the
    remainder term estimated from the analytic drift, zero for models that
    declare an exact linear regression); ``equal_dist_prediction`` is
    ``L Sigma + Sigma L^t``, which only needs equality in distribution.
    """
    lam = _resolve_lambda(model, lam, n, seed)
    if sigma is None:
        sigma = model.claimed_sigma
    if sigma is None:
        raise ValueError("no covariance matrix available (pass sigma=)")
    sigma = np.asarray(sigma, dtype=float)
    d = model.dim
    prods = []
    wr_acc = np.zeros((d, d))
    count = 0
    for lo, hi, rng in chunk_generators(seed, n):
        configs = model.sample_configs(rng, hi - lo)
        w = np.asarray(model.statistic(configs), dtype=float)
        wp = np.asarray(model.statistic(model.step(configs, rng)), dtype=float)
        delta = wp - w
        prods.append(delta[:, :, None] * delta[:, None, :])
        if not model.claimed_r_zero and model.analytic_drift is not None:
            R = np.asarray(model.analytic_drift(configs), dtype=float) + w @ lam.T
            wr_acc += np.einsum("bi,bj->ij", w, R)
            count += hi - lo
    prods = np.concatenate(prods, axis=0)
    empirical = symmetrize(prods.mean(axis=0))
    se = np.empty((d, d))
    for i in range(d):
        for j in range(d):
            se[i, j] = batch_means_se(prods[:, i, j])
    ewr = wr_acc / count if count else np.zeros((d, d))
    return StepCovariance(
        empirical=empirical,
        empirical_se=se,
        exchangeable_prediction=2.0 * sigma @ lam.T - 2.0 * ewr,
        equal_dist_prediction=lam @ sigma + sigma @ lam.T,
    )


def sigma_tilde(lam, sigma) -> np.ndarray:
    """Canonical covariance ``(L Sigma L^{-t} + Sigma) / 2`` for the coupling."""
    lam = np.asarray(lam, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    try:
        lam_inv_t = invert(lam).T
    except SingularMatrixError:
        raise
    return symmetrize(0.5 * (lam @ sigma @ lam_inv_t + sigma))


def embed_split(lam, l: int, model: PairModel, n: int, seed: int,
                k: int | None = None) -> EmbeddingSplit:
    """Partition the regression matrix for the leading ``l`` coordinates.

    The remainder of the l-dimensional margin is ``-L_{12} E[tail | lead]``.
    The conditional mean is approximated by k-nearest-neighbour averaging
    (k = ceil(sqrt(n)) by default) over sampled (lead, tail) pairs; any
    consistent nonparametric estimate suffices for a variance estimate, and
    this choice is flagged in reports.  When ``L_{12}`` is exactly zero no
    estimate is attempted and the variance is exactly zero.
    """
    lam = np.asarray(lam, dtype=float)
    d = lam.shape[0]
    if not 1 <= l < d:
        raise ValueError(f"need 1 <= l < {d}, got {l}")
    lam11 = lam[:l, :l].copy()
    lam12 = lam[:l, l:].copy()
    if np.all(lam12 == 0.0):
        return EmbeddingSplit(l, lam11, lam12, 0.0, np.zeros(l))
    ws = []
    for lo, hi, rng in chunk_generators(seed, n):
        configs = model.sample_configs(rng, hi - lo)
        ws.append(np.asarray(model.statistic(configs), dtype=float))
    W = np.concatenate(ws, axis=0)
    lead, tail = W[:, :l], W[:, l:]
    if k is None:
        k = int(np.ceil(np.sqrt(n)))
    tree = cKDTree(lead)
    _, idx = tree.query(lead, k=k)
    if k == 1:
        idx = idx[:, None]
    cond_mean = tail[idx].mean(axis=1)
    r_hat = -cond_mean @ lam12.T
    r_vars = r_hat.var(axis=0)
    return EmbeddingSplit(l, lam11, lam12, float(r_vars.max()), r_vars)


def moment_swap_test(model: PairModel, n: int, seed: int) -> list[SwapMoment]:
    """Compare bivariate moments of (W, W') and (W', W) up to order 2.

    For an exchangeable pair every listed moment difference is zero in
    expectation.  Cheap, and catches couplings that only have equality in
    distribution: those typically fail on the mixed moments
    ``E W_i W'_j - E W'_i W_j``.
    """
    d = model.dim
    diffs: dict[str, list[np.ndarray]] = {}
    for lo, hi, rng in chunk_generators(seed, n):
        configs = model.sample_configs(rng, hi - lo)
        w = np.asarray(model.statistic(configs), dtype=float)
        wp = np.asarray(model.statistic(model.step(configs, rng)), dtype=float)
        for i in range(d):
            diffs.setdefault(f"m1[{i}]", []).append(w[:, i] - wp[:, i])
            for j in range(d):
                diffs.setdefault(f"mix[{i},{j}]", []).append(
                    w[:, i] * wp[:, j] - wp[:, i] * w[:, j])
            for j in range(i, d):
                diffs.setdefault(f"pure[{i},{j}]", []).append(
                    w[:, i] * w[:, j] - wp[:, i] * wp[:, j])
    out = []
    for label, parts in sorted(diffs.items()):
        x = np.concatenate(parts)
        out.append(SwapMoment(label, float(x.mean()), batch_means_se(x)))
    return out


def standardized_model(model: PairModel, sigma) -> PairModel:
    """The same coupling with the statistic mapped through ``Sigma^{-1/2}``."""
    cov = CovarianceModel(np.asarray(sigma, dtype=float))
    T = cov.inv_sqrt

    def stat(configs, _base=model.statistic):
        return np.asarray(_base(configs), dtype=float) @ T.T

    drift = None
    if model.analytic_drift is not None:
        def drift(configs, _base=model.analytic_drift):
            return np.asarray(_base(configs), dtype=float) @ T.T

    profile = None
    if model.fine_profile is not None:
        def profile(configs, _base=model.fine_profile):
            return np.asarray(_base(configs), dtype=float) @ T.T

    lam_hat = None
    if model.claimed_lambda is not None:
        lam = np.asarray(model.claimed_lambda, dtype=float)
        lam_hat = T @ lam @ cov.sqrt
    return replace(
        model,
        statistic=stat,
        analytic_drift=drift,
        fine_profile=profile,
        claimed_lambda=lam_hat,
        claimed_sigma=np.eye(model.dim),
        name=model.name + "-standardized",
    )
