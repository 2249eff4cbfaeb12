"""Batch experiment runner for the coupling models and bound suites.

Subcommands configure a model, run the selected check suites with a fixed
seed, and emit a deterministic tabular report.  The exit code is zero only
when every selected check passes its tolerance.
"""

import argparse
import itertools
import math
import sys
from dataclasses import dataclass, field, replace

import numpy as np

from . import report as rpt
from .bounds import lambda_weights, nonsmooth_class_bound, smooth_function_bound
from .distance import battery, distance_estimate
from .errors import ConfigError, SteinPairsError
from .estimators import (EXACT, Estimate, cond_variance,
                         cond_variance_by_statistic, third_abs_moment, var_R)
from .pairs import (check_antisymmetry, embed_split, estimate_linearity,
                    moment_swap_test, sigma_tilde, standardized_model,
                    step_covariance)
from .permutations import (DenseTensor, enumerate_permutation_variance,
                           hoeffding_variance, load_tensor_records, mww_tensor,
                           perm_drift, perm_pair_model, perm_remainder,
                           perm_stats, transposition_sweep_drift)
from .runs import (RunsConfig, enum_statistic_cov, enumerate_states,
                   runs_bound_analytic, runs_cross_moment, runs_drift,
                   runs_lambda, runs_pair_model, runs_sigma, runs_statistic)
from .zoo import (IidSumConfig, SpinChainConfig, iid_bound, iid_bound_display,
                  iid_pair, spin_chain_lambda, spin_chain_pair_moment,
                  spin_chain_step, spin_equilibrium, spin_sum_pair)

MODELS = ("runs", "iidsum", "perm", "mww", "spinchain", "bound", "distance", "oracle")
SUITES = ("linearity", "identities", "bounds", "distances", "oracles")

_DEFAULTS = {
    "seed": 1,
    "samples": 20000,
    "format": "tabular_text",
    "gamma_d": 1.0,
    "a_const": None,
    "enumerate": False,
    "out": None,
    "suites": "all",
    # model parameters
    "n_seq": 12,
    "d": 2,
    "p": 0.5,
    "n": 50,
    "law": "rademacher",
    "q": 0.5,
    "nx": 3,
    "ny": 3,
    "model": "runs",
    "target": "runs",
    "tensor_file": None,
    "sweep": None,
}

_TYPES = {
    "seed": int, "samples": int, "n_seq": int, "d": int, "n": int,
    "nx": int, "ny": int, "p": float, "q": float, "gamma_d": float,
    "a_const": float, "enumerate": bool, "format": str, "out": str,
    "suites": str, "law": str, "model": str, "target": str, "tensor_file": str,
    "sweep": str,
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat key-value experiment description; round-trips through text."""

    model: str
    values: dict = field(default_factory=dict)

    def get(self, key):
        if key in self.values:
            return self.values[key]
        return _DEFAULTS[key]

    def to_text(self) -> str:
        lines = [f"model = {self.model}"]
        for key in sorted(self.values):
            lines.append(f"{key} = {self.values[key]}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        model = None
        values = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#")[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError("expected 'key = value'", line=lineno)
            key, _, val = line.partition("=")
            key = key.strip().replace("-", "_")
            val = val.strip()
            if key == "model":
                if val not in MODELS:
                    raise ConfigError(f"unknown model {val!r}", field="model", line=lineno)
                model = val
                continue
            if key not in _TYPES:
                raise ConfigError(f"unknown key {key!r}", field=key, line=lineno)
            typ = _TYPES[key]
            try:
                if typ is bool:
                    values[key] = val.lower() in ("1", "true", "yes", "on")
                else:
                    values[key] = typ(val)
            except ValueError as exc:
                raise ConfigError(str(exc), field=key, line=lineno) from exc
        if model is None:
            raise ConfigError("missing model", field="model")
        cfg = cls(model=model, values=values)
        _validate(cfg)
        return cfg


def _validate(cfg: ExperimentConfig):
    p = cfg.get("p")
    if not 0.0 < p < 1.0:
        raise ConfigError(f"p={p} outside (0, 1)", field="p")
    q = cfg.get("q")
    if not 0.0 < q < 1.0:
        raise ConfigError(f"q={q} outside (0, 1)", field="q")
    if cfg.get("samples") < 2:
        raise ConfigError("samples must be at least 2", field="samples")
    if cfg.get("seed") < 0:
        raise ConfigError("seed must be a nonnegative integer", field="seed")
    fmt = cfg.get("format")
    if fmt not in rpt.FORMATS:
        raise ConfigError(f"unknown format {fmt!r}", field="format")
    suites = cfg.get("suites")
    for s in _suite_list(suites):
        if s not in SUITES:
            raise ConfigError(f"unknown suite {s!r}", field="suites")


def _suite_list(spec: str) -> tuple[str, ...]:
    if spec == "all":
        return SUITES
    return tuple(s.strip() for s in spec.split(",") if s.strip())


# ---------------------------------------------------------------------------
# shared row builders


def _z_row(name: str, value: float, se: float, z_tol: float, ref_key: str) -> rpt.CheckRow:
    z = abs(value) / se if se > 0 else (0.0 if value == 0.0 else math.inf)
    return rpt.check_row(name, z, 0.0, z_tol, ref_key, std_error=None,
                         passed=z <= z_tol)


def _z_matrix(dev: np.ndarray, se: np.ndarray, atol: float = 1e-12) -> float:
    """Largest entrywise |dev|/se; exact zeros (0/0) count as z = 0."""
    dev = np.abs(np.asarray(dev, dtype=float))
    se = np.asarray(se, dtype=float)
    z = np.where(se > 0, dev / np.where(se > 0, se, 1.0),
                 np.where(dev <= atol, 0.0, np.inf))
    return float(z.max())


def _swap_rows(model, samples, seed, expect_fail=False) -> list[rpt.CheckRow]:
    moments = moment_swap_test(model, samples, seed)
    zmax = max(abs(m.zscore) for m in moments)
    if expect_fail:
        passed = zmax > 4.0
        name = "swap-moment-max-z-detects-asymmetry"
    else:
        passed = zmax <= 4.0
        name = "swap-moment-max-z"
    return [rpt.check_row(name, zmax, 0.0 if not expect_fail else None,
                          4.0, "swap-exchangeability", passed=passed)]


def _dominance_rows(model, sigma, prefix, bound_for, samples, seed) -> list[rpt.CheckRow]:
    rows = []
    for k, tf in enumerate(battery(model.dim)):
        est = distance_estimate(model, sigma, tf, samples, seed + k)
        bound = bound_for(tf)
        ok = abs(est.value) <= bound + 4.0 * est.std_error
        rows.append(rpt.check_row(
            f"{prefix}-distance-{tf.name}", abs(est.value), bound,
            4.0 * est.std_error, "distance-dominance",
            std_error=est.std_error, passed=ok))
    return rows


def _sqrt_est(e: Estimate) -> tuple[float, float]:
    v = math.sqrt(max(e.value, 0.0))
    if e.value > 0:
        return v, e.std_error / (2.0 * v)
    return v, math.sqrt(e.std_error)


def assemble_bound(model, h_norms, samples, seed, lam=None,
                   use_enumeration=True):
    """Estimator-driven three-term bound for a pair model."""
    d = model.dim
    lam = np.asarray(lam if lam is not None else model.claimed_lambda, dtype=float)
    lw = lambda_weights(lam)
    pair_cache = {}
    for a in range(d):
        for b in range(a, d):
            pair_cache[(a, b)] = cond_variance(
                model, a, b, samples, seed + 17 * a + b,
                force_monte_carlo=not use_enumeration)
    A = A_se = 0.0
    for i in range(d):
        for j in range(d):
            est = pair_cache[tuple(sorted((i, j)))]
            v, vse = _sqrt_est(est)
            A += lw[i] * v
            A_se += lw[i] * vse
    triple_cache = {}
    for key in itertools.combinations_with_replacement(range(d), 3):
        triple_cache[key] = third_abs_moment(
            model, *key, samples, seed + 101 * sum(key),
            force_monte_carlo=not use_enumeration)
    B = B_se = 0.0
    for i in range(d):
        for j in range(d):
            for k in range(d):
                est = triple_cache[tuple(sorted((i, j, k)))]
                B += lw[i] * est.value
                B_se += lw[i] * est.std_error
    if model.claimed_r_zero:
        C_est = Estimate(0.0, 0.0, EXACT, 1)
    else:
        fit = estimate_linearity(model, max(samples, d + 2), seed + 7,
                                 against_claimed=model.claimed_lambda is not None)
        vr = var_R(fit)
        C_est = Estimate(float(np.sqrt(vr).dot(lw)),
                         float(np.nextafter(0.0, 1.0)), "monte_carlo", fit.n_samples)
    mode = EXACT if all(e.mode == EXACT for e in pair_cache.values()) else "monte_carlo"
    a_est = Estimate(A, A_se if mode != EXACT else 0.0, mode, samples)
    b_est = Estimate(B, B_se if mode != EXACT else 0.0, mode, samples)
    sigma = model.claimed_sigma if model.claimed_sigma is not None else np.eye(d)
    return smooth_function_bound(a_est, b_est, C_est, h_norms, sigma, lam_weights=lw,
                           provenance={"A": "fine-conditioning surrogate",
                                       "B": "fine-conditioning surrogate",
                                       "C": "regression remainder"})


# ---------------------------------------------------------------------------
# model suites


def _runs_rows(cfg: ExperimentConfig) -> list[rpt.CheckRow]:
    rcfg = RunsConfig(cfg.get("n_seq"), cfg.get("d"), cfg.get("p"))
    seed = cfg.get("seed")
    samples = cfg.get("samples")
    suites = _suite_list(cfg.get("suites"))
    model = runs_pair_model(rcfg)
    rows = []
    rng = np.random.default_rng(seed)
    states = (rng.random((500, rcfg.n_seq)) < rcfg.p).astype(np.uint8)
    if "linearity" in suites:
        fit = estimate_linearity(model, max(samples, 2000), seed)
        tol = 5.0 * float(fit.standard_errors.max()) + 1e-8
        rows.append(rpt.check_row("regression-matrix-recovery", fit.claimed_deviation,
                                  0.0, tol, "runs-regression-closed-form"))
        rows.append(rpt.check_row("remainder-variance", float(var_R(fit).max()), 0.0,
                                  1e-10, "runs-zero-remainder"))
    if "identities" in suites:
        dev = np.abs(runs_drift(states, rcfg)
                     + runs_statistic(states, rcfg) @ runs_lambda(rcfg).T).max()
        rows.append(rpt.check_row("drift-linearity-identity", float(dev), 0.0, 1e-12,
                                  "runs-zero-remainder"))
        if rcfg.n_seq <= 14 or cfg.get("enumerate"):
            enum_cov = enum_statistic_cov(rcfg)
            dev = np.abs(enum_cov - runs_sigma(rcfg)).max()
            rows.append(rpt.check_row("covariance-closed-form-vs-enumeration",
                                      float(dev), 0.0, 1e-10,
                                      "runs-covariance-closed-form"))
        sc = step_covariance(model, samples, seed + 1)
        zmax = _z_matrix(sc.empirical - sc.exchangeable_prediction, sc.empirical_se)
        rows.append(rpt.check_row("step-covariance-z", zmax, 0.0, 5.0,
                                  "step-covariance-exchangeable", passed=zmax <= 5.0))
        g = battery(max(rcfg.d, 2))[3]
        mean, se = check_antisymmetry(model, g.grad, samples, seed + 2)
        rows.append(_z_row("antisymmetry-z", mean, se, 4.0, "pair-antisymmetry-identity"))
        rows.extend(_swap_rows(model, samples, seed + 3))
        if rcfg.d == 2:
            # remainder of the primary count without its auxiliary coordinate;
            # the conditional mean is a nearest-neighbour estimate
            reordered = runs_pair_model(rcfg, standardize=False, coords=(2, 1))
            lam12 = np.array([[2.0, -2 * rcfg.p], [0.0, 1.0]]) / rcfg.n_seq
            split = embed_split(lam12, 1, reordered, min(samples, 4000), seed + 4)
            rows.append(rpt.info_row("embedding-remainder-variance-knn",
                                     split.r_variance_estimate,
                                     "embedding-knn-estimate"))
    if "bounds" in suites:
        rep = runs_bound_analytic(rcfg)
        rows.append(rpt.info_row("analytic-bound-total", rep.total, "runs-envelope"))
        rep2 = runs_bound_analytic(replace(rcfg, n_seq=2 * rcfg.n_seq))
        ratio = rep2.total / rep.total
        rows.append(rpt.check_row("bound-root-n-scaling", ratio, 1.0 / math.sqrt(2.0),
                                  1e-12, "runs-envelope"))
    if "distances" in suites:
        rows.extend(_dominance_rows(
            model, runs_sigma(rcfg), "runs",
            lambda tf: runs_bound_analytic(rcfg, tf.norms).total, samples, seed + 5))
    if "oracles" in suites:
        small = rcfg if rcfg.n_seq <= 10 else replace(rcfg, n_seq=8 if rcfg.d == 2 else 3 * rcfg.d)
        m_small = runs_pair_model(small)
        exact = cond_variance(m_small, small.d - 1, small.d - 1, samples, seed + 9)
        mc = cond_variance(m_small, small.d - 1, small.d - 1, samples, seed + 9,
                           force_monte_carlo=True)
        rows.append(_z_row("cond-variance-enum-vs-mc", mc.value - exact.value,
                           mc.std_error, 5.0, "fine-conditioning-surrogate"))
        env = 768.0 * small.d ** 5 / (small.n_seq ** 3 * small.p ** small.d
                                      * (1.0 - small.p) ** 2)
        rows.append(rpt.check_row("cond-variance-envelope", exact.value, None, env,
                                  "runs-envelope", passed=exact.value <= env))
    return rows


def _iid_rows(cfg: ExperimentConfig) -> list[rpt.CheckRow]:
    icfg = IidSumConfig(cfg.get("d"), cfg.get("n"), cfg.get("law"), cfg.get("q"))
    seed = cfg.get("seed")
    samples = cfg.get("samples")
    suites = _suite_list(cfg.get("suites"))
    model = iid_pair(icfg)
    rows = []
    if "linearity" in suites:
        fit = estimate_linearity(model, max(samples, 2000), seed)
        tol = 5.0 * float(fit.standard_errors.max()) + 1e-8
        rows.append(rpt.check_row("regression-matrix-recovery", fit.claimed_deviation,
                                  0.0, tol, "iid-replacement-regression"))
    if "identities" in suites:
        if icfg.d >= 2:
            est = third_abs_moment(model, 0, 1, 1, min(samples, 5000), seed + 1,
                                   force_monte_carlo=True)
            rows.append(rpt.check_row("cross-third-moment", est.value, 0.0, 1e-12,
                                      "iid-single-coordinate-moves"))
        sc = step_covariance(model, samples, seed + 2)
        zmax = _z_matrix(sc.empirical - sc.exchangeable_prediction, sc.empirical_se)
        rows.append(rpt.check_row("step-covariance-z", zmax, 0.0, 5.0,
                                  "step-covariance-exchangeable", passed=zmax <= 5.0))
        g = battery(max(icfg.d, 2))[3]
        mean, se = check_antisymmetry(model, g.grad, samples, seed + 3)
        rows.append(_z_row("antisymmetry-z", mean, se, 4.0, "pair-antisymmetry-identity"))
        rows.extend(_swap_rows(model, samples, seed + 4))
    if "bounds" in suites:
        rep = iid_bound(icfg, (1.0, 1.0, 1.0))
        disp = iid_bound_display(icfg, (1.0, 1.0, 1.0))
        rows.append(rpt.check_row("bound-vs-displayed-arithmetic", rep.total, disp,
                                  1e-12 * max(disp, 1.0), "iid-bound-closed-form"))
    if "distances" in suites:
        rows.extend(_dominance_rows(
            model, np.eye(icfg.d), "iid",
            lambda tf: iid_bound(icfg, tf.norms).total, samples, seed + 5))
    if "oracles" in suites and icfg.law in ("rademacher", "bernoulli"):
        small = IidSumConfig(2, 4, icfg.law, icfg.q)
        m_small = iid_pair(small)
        exact = cond_variance(m_small, 0, 0, samples, seed + 6)
        mc = cond_variance(m_small, 0, 0, samples, seed + 6, force_monte_carlo=True)
        rows.append(_z_row("cond-variance-enum-vs-mc", mc.value - exact.value,
                           mc.std_error, 5.0, "fine-conditioning-surrogate"))
    return rows


def _perm_rows(cfg: ExperimentConfig) -> list[rpt.CheckRow]:
    n = cfg.get("n")
    if n > 64:
        raise ConfigError("permutation size too large for the check suite", field="n")
    seed = cfg.get("seed")
    samples = min(cfg.get("samples"), 5000)
    rng = np.random.default_rng(seed)
    if cfg.get("tensor_file"):
        tensor = load_tensor_records(cfg.get("tensor_file"), n)
    else:
        n = min(n, 8)
        a = rng.normal(size=(n, n, n, n))
        idx = np.arange(n)
        block = a[idx, idx]
        block[:, ~np.eye(n, dtype=bool)] = 0.0
        a[idx, idx] = block
        mask = a != 0
        a[mask] -= a[mask].sum() / mask.sum()
        tensor = DenseTensor(a)
    model = perm_pair_model(tensor)
    rows = []
    worst_v = worst_v0 = 0.0
    lam = 2.0 / (tensor.n - 1)
    for _ in range(20):
        pi = rng.permutation(tensor.n)
        sweep = transposition_sweep_drift(tensor, pi)
        formula = perm_drift(tensor, pi)[0]
        stats = perm_stats(tensor, pi)[0]
        worst_v = max(worst_v, float(np.abs(sweep[1:] + lam * stats[1:]).max()))
        worst_v0 = max(worst_v0, float(abs(sweep[0] - formula[0])))
    rows.append(rpt.check_row("companion-drift-identity", worst_v, 0.0, 1e-10,
                              "perm-drift-identity"))
    rows.append(rpt.check_row("v0-decomposition-identity", worst_v0, 0.0, 1e-8,
                              "perm-drift-identity"))
    rows.extend(_swap_rows(model, samples, seed + 1))
    g = battery(3)[3]
    mean, se = check_antisymmetry(model, g.grad, samples, seed + 2)
    rows.append(_z_row("antisymmetry-z", mean, se, 4.0, "pair-antisymmetry-identity"))
    return rows


def _mww_rows(cfg: ExperimentConfig) -> list[rpt.CheckRow]:
    nx, ny = cfg.get("nx"), cfg.get("ny")
    tensor = mww_tensor(nx, ny)
    n = tensor.n
    seed = cfg.get("seed")
    rng = np.random.default_rng(seed)
    rows = []
    lam = 2.0 / (n - 1)
    worst_r1 = worst_r2 = 0.0
    for _ in range(50):
        pi = rng.permutation(n)
        rem = perm_remainder(tensor, pi)
        v0 = float(tensor.v0(pi)[0])
        worst_r1 = max(worst_r1, abs(float(rem.r1[0])))
        worst_r2 = max(worst_r2, abs(float(rem.r2[0]) + lam / n * v0))
    rows.append(rpt.check_row("rank-sum-r1-zero", worst_r1, 0.0, 1e-12,
                              "mww-remainder-identity"))
    rows.append(rpt.check_row("rank-sum-r2-proportional-v0", worst_r2, 0.0, 1e-12,
                              "mww-remainder-identity"))
    if math.factorial(n) <= 1 << 20:
        var_enum = enumerate_permutation_variance(tensor, "v0")
        formula = nx * ny * (n + 1) / 12.0
        rows.append(rpt.check_row("variance-closed-form", var_enum, formula,
                                  1e-10 * formula, "mww-variance-closed-form"))
    arr = rng.normal(size=(5, 5))
    rows.append(rpt.check_row(
        "hoeffding-vs-enumeration",
        hoeffding_variance(arr), enumerate_permutation_variance(arr), 1e-10,
        "hoeffding-variance"))
    return rows


def _spin_rows(cfg: ExperimentConfig) -> list[rpt.CheckRow]:
    scfg = SpinChainConfig(max(cfg.get("d"), 4), cfg.get("n"))
    seed = cfg.get("seed")
    samples = cfg.get("samples")
    rng = np.random.default_rng(seed)
    rows = []
    lam = spin_chain_lambda(scfg.d)
    x = spin_equilibrium(scfg.d, 200, rng).astype(float)
    drift = np.zeros_like(x)
    for i in range(scfg.d):
        drift[:, i] = (0.5 * (-x[:, (i - 1) % scfg.d])
                       + 0.5 * x[:, (i + 1) % scfg.d] - x[:, i]) / scfg.d
    rows.append(rpt.check_row("single-step-drift-identity",
                              float(np.abs(drift + x @ lam.T).max()), 0.0, 1e-12,
                              "spin-drift-identity"))
    moment = spin_chain_pair_moment(x[:50])
    worst = 0.0
    for b in range(50):
        x0 = x[b].astype(np.int8)
        acc = np.zeros((scfg.d, scfg.d))
        for i in range(scfg.d):
            for val in (-x0[(i - 1) % scfg.d], x0[(i + 1) % scfg.d]):
                y = x0.astype(float).copy()
                y[i] = val
                acc += np.outer(y, y) / (2 * scfg.d)
        worst = max(worst, float(np.abs(acc - moment[b]).max()))
    rows.append(rpt.check_row("pair-moment-identity", worst, 0.0, 1e-12,
                              "spin-pair-moment-identity"))
    # stationary cross-correlations along a trajectory
    steps = min(samples, 100000)
    state = spin_equilibrium(scfg.d, 1, rng)[0]
    prods = np.empty((steps, scfg.d))
    for t in range(steps):
        state = spin_chain_step(state, rng)
        prods[t] = state * np.roll(state, -1)
    from .util import batch_means_se

    zmax = max(abs(prods[:, i].mean()) / batch_means_se(prods[:, i])
               for i in range(scfg.d))
    rows.append(rpt.check_row("stationary-cross-correlation-z", zmax, 0.0, 5.0,
                              "spin-equilibrium-uncorrelated", passed=zmax <= 5.0))
    model = spin_sum_pair(scfg)
    rows.extend(_swap_rows(model, samples, seed + 1, expect_fail=True))
    sc = step_covariance(model, samples, seed + 2)
    zmax = _z_matrix(sc.empirical - sc.equal_dist_prediction, sc.empirical_se)
    rows.append(rpt.check_row("step-covariance-equal-dist-z", zmax, 0.0, 5.0,
                              "step-covariance-equal-dist", passed=zmax <= 5.0))
    st = sigma_tilde(lam, np.eye(scfg.d))
    off = st - np.diag(np.diag(st))
    rows.append(rpt.check_row("canonical-covariance-asymmetry",
                              float(np.abs(off).max()), None, 0.01,
                              "canonical-covariance",
                              passed=float(np.abs(off).max()) > 0.01))
    return rows


def _bound_rows(cfg: ExperimentConfig) -> list[rpt.CheckRow]:
    target = cfg.get("target")
    seed = cfg.get("seed")
    samples = cfg.get("samples")
    rows = []
    if target == "runs":
        rcfg = RunsConfig(cfg.get("n_seq"), cfg.get("d"), cfg.get("p"))
        model = runs_pair_model(rcfg)
        sigma = runs_sigma(rcfg)
        use_enum = cfg.get("enumerate") and rcfg.n_seq <= 10
        rep = assemble_bound(model, (1.0, 1.0, 1.0), samples, seed,
                             use_enumeration=use_enum)
        rows.append(rpt.info_row("estimator-bound-total", rep.total,
                                 "smooth-bound-total", std_error=rep.total_se))
        analytic = runs_bound_analytic(rcfg)
        rows.append(rpt.check_row("analytic-envelope-dominates", rep.total,
                                  None, analytic.total, "runs-envelope",
                                  passed=rep.total <= analytic.total))
        std = standardized_model(model, sigma)
        repp = assemble_bound(std, (1.0, 1.0, 1.0), samples, seed + 1,
                              use_enumeration=use_enum)
    elif target == "iidsum":
        icfg = IidSumConfig(cfg.get("d"), cfg.get("n"), cfg.get("law"), cfg.get("q"))
        model = iid_pair(icfg)
        rep = assemble_bound(model, (1.0, 1.0, 1.0), samples, seed,
                             use_enumeration=False)
        rows.append(rpt.info_row("estimator-bound-total", rep.total,
                                 "smooth-bound-total", std_error=rep.total_se))
        # the conditional-variance term uses the fine surrogate and may exceed
        # its statistic-conditioned closed form; the third-moment cap is exact
        closed = iid_bound(icfg, (1.0, 1.0, 1.0))
        rows.append(rpt.check_row("third-moment-under-cap", rep.B, None,
                                  closed.B + 5.0 * rep.B_se,
                                  "iid-bound-closed-form",
                                  passed=rep.B <= closed.B + 5.0 * rep.B_se))
        repp = rep  # statistic already standardized (identity covariance)
    elif target == "perm":
        # estimator-backed ingredients on request only; the worked analysis of
        # this model stops short of assembling a total, so the rows are
        # labeled experimental
        tensor = mww_tensor(cfg.get("nx"), cfg.get("ny"))
        model = perm_pair_model(tensor)
        if math.factorial(tensor.n) <= 1 << 20:
            perms = np.array(
                list(itertools.permutations(range(tensor.n))), dtype=np.int64)
            stats = perm_stats(tensor, perms)
            sigma = np.cov(stats.T, bias=True)
        else:
            sigma = np.eye(3)
        model = replace(model, claimed_sigma=sigma)
        rep = assemble_bound(model, (1.0, 1.0, 1.0), min(samples, 5000), seed,
                             use_enumeration=cfg.get("enumerate"))
        rows.append(rpt.info_row("experimental-estimator-bound-total", rep.total,
                                 "smooth-bound-total", std_error=rep.total_se))
        repp = rep
    else:
        raise ConfigError(f"bound target must be runs, iidsum or perm, got {target!r}",
                          field="target")
    d = cfg.get("d") if target != "perm" else 3
    a = cfg.get("a_const") or 2.0 * math.sqrt(d)
    ns = nonsmooth_class_bound(repp.A, repp.B, repp.C, a, d, cfg.get("gamma_d"))
    rows.append(rpt.info_row("nonsmooth-bound-total", ns.total, "nonsmooth-bound"))
    rows.append(rpt.info_row("nonsmooth-smoothing-parameter", ns.T_prime,
                             "nonsmooth-bound"))
    return rows


def _distance_rows(cfg: ExperimentConfig) -> list[rpt.CheckRow]:
    target = cfg.get("target")
    seed = cfg.get("seed")
    samples = cfg.get("samples")
    if cfg.get("sweep"):
        return _sweep_rows(cfg)
    if target == "runs":
        rcfg = RunsConfig(cfg.get("n_seq"), cfg.get("d"), cfg.get("p"))
        model = runs_pair_model(rcfg)
        return _dominance_rows(model, runs_sigma(rcfg), "runs",
                               lambda tf: runs_bound_analytic(rcfg, tf.norms).total,
                               samples, seed)
    if target == "iidsum":
        icfg = IidSumConfig(cfg.get("d"), cfg.get("n"), cfg.get("law"), cfg.get("q"))
        model = iid_pair(icfg)
        return _dominance_rows(model, np.eye(icfg.d), "iid",
                               lambda tf: iid_bound(icfg, tf.norms).total,
                               samples, seed)
    raise ConfigError(f"distance target must be runs or iidsum, got {target!r}",
                      field="target")


def _sweep_rows(cfg: ExperimentConfig) -> list[rpt.CheckRow]:
    """Plot-data rows for a bound-vs-size sweep: one row per size with the
    measured distance as the value, its SE, and the certified bound as the
    reference column."""
    target = cfg.get("target")
    seed = cfg.get("seed")
    samples = cfg.get("samples")
    try:
        sizes = [int(s) for s in cfg.get("sweep").split(",") if s.strip()]
    except ValueError as exc:
        raise ConfigError(str(exc), field="sweep") from exc
    if not sizes:
        raise ConfigError("empty sweep list", field="sweep")
    rows = []
    tf = battery(max(cfg.get("d"), 2))[3]
    for size in sizes:
        if target == "runs":
            rcfg = RunsConfig(size, cfg.get("d"), cfg.get("p"))
            model = runs_pair_model(rcfg)
            est = distance_estimate(model, runs_sigma(rcfg), tf, samples, seed)
            bound = runs_bound_analytic(rcfg, tf.norms).total
        elif target == "iidsum":
            icfg = IidSumConfig(cfg.get("d"), size, cfg.get("law"), cfg.get("q"))
            model = iid_pair(icfg)
            est = distance_estimate(model, np.eye(icfg.d), tf, samples, seed)
            bound = iid_bound(icfg, tf.norms).total
        else:
            raise ConfigError(f"sweep target must be runs or iidsum, got {target!r}",
                              field="target")
        rows.append(rpt.CheckRow(f"sweep-n={size}", abs(est.value),
                                 est.std_error, bound, None, "info",
                                 "distance-dominance"))
    return rows


def _oracle_rows(cfg: ExperimentConfig) -> list[rpt.CheckRow]:
    seed = cfg.get("seed")
    samples = cfg.get("samples")
    rows = []
    rcfg = RunsConfig(min(cfg.get("n_seq"), 8), 2, cfg.get("p"))
    model = runs_pair_model(rcfg)
    for (i, j) in ((0, 0), (0, 1), (1, 1)):
        exact = cond_variance(model, i, j, samples, seed)
        mc = cond_variance(model, i, j, samples, seed + i + 3 * j,
                           force_monte_carlo=True)
        rows.append(_z_row(f"runs-cond-variance[{i},{j}]-enum-vs-mc",
                           mc.value - exact.value, mc.std_error, 5.0,
                           "fine-conditioning-surrogate"))
    exact = third_abs_moment(model, 1, 1, 1, samples, seed + 11)
    mc = third_abs_moment(model, 1, 1, 1, samples, seed + 11, force_monte_carlo=True)
    rows.append(_z_row("runs-third-moment-enum-vs-mc", mc.value - exact.value,
                       mc.std_error, 5.0, "fine-conditioning-surrogate"))
    fine = cond_variance(model, 1, 1, samples, seed)
    coarse = cond_variance_by_statistic(model, 1, 1)
    rows.append(rpt.check_row("surrogate-dominates-statistic-conditioning",
                              coarse.value, None, fine.value,
                              "fine-conditioning-surrogate",
                              passed=coarse.value <= fine.value + 1e-12))
    states, probs = enumerate_states(rcfg)
    v = runs_statistic(states, rcfg, standardize=False)
    for i in range(1, rcfg.d + 1):
        for j in range(1, i + 1):
            closed = runs_cross_moment(rcfg, i, j)
            enum = float(probs @ (v[:, i - 1] * v[:, j - 1]))
            rows.append(rpt.check_row(f"runs-cross-moment[{i},{j}]", closed, enum,
                                      1e-10 * max(abs(enum), 1.0),
                                      "runs-covariance-closed-form"))
    return rows


_RUNNERS = {
    "runs": _runs_rows,
    "iidsum": _iid_rows,
    "perm": _perm_rows,
    "mww": _mww_rows,
    "spinchain": _spin_rows,
    "bound": _bound_rows,
    "distance": _distance_rows,
    "oracle": _oracle_rows,
}


def run_experiment(cfg: ExperimentConfig) -> rpt.Report:
    """Execute the configured suites deterministically and build the report."""
    _validate(cfg)
    report = rpt.Report(
        title=f"steinpairs {cfg.model} suite",
        meta={"model": cfg.model,
              **{k: cfg.values[k] for k in sorted(cfg.values) if k != "out"}},
    )
    report.extend(_RUNNERS[cfg.model](cfg))
    return report


# ---------------------------------------------------------------------------
# argument parsing


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="steinpairs",
        description="check suites and error bounds for exchangeable-pair couplings")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in MODELS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="key = value config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--samples", type=int, default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--format", choices=rpt.FORMATS, default=None)
        p.add_argument("--gamma-d", type=float, default=None, dest="gamma_d")
        p.add_argument("--a-const", type=float, default=None, dest="a_const")
        p.add_argument("--enumerate", action="store_const", const=True,
                       default=None, dest="enumerate_")
        p.add_argument("--suites", default=None)
        if name in ("runs",):
            p.add_argument("--n-seq", type=int, default=None, dest="n_seq")
            p.add_argument("--d", type=int, default=None)
            p.add_argument("--p", type=float, default=None)
        if name in ("iidsum",):
            p.add_argument("--d", type=int, default=None)
            p.add_argument("--n", type=int, default=None)
            p.add_argument("--law", default=None)
            p.add_argument("--q", type=float, default=None)
        if name == "perm":
            p.add_argument("--n", type=int, default=None)
            p.add_argument("--tensor-file", default=None, dest="tensor_file")
        if name in ("mww", "bound"):
            p.add_argument("--nx", type=int, default=None)
            p.add_argument("--ny", type=int, default=None)
        if name == "spinchain":
            p.add_argument("--d", type=int, default=None)
            p.add_argument("--n", type=int, default=None)
        if name in ("bound", "distance"):
            choices = ("runs", "iidsum", "perm") if name == "bound" else ("runs", "iidsum")
            p.add_argument("--target", default=None, choices=choices)
            p.add_argument("--n-seq", type=int, default=None, dest="n_seq")
            p.add_argument("--d", type=int, default=None)
            p.add_argument("--p", type=float, default=None)
            p.add_argument("--n", type=int, default=None)
            p.add_argument("--law", default=None)
            if name == "distance":
                p.add_argument("--sweep", default=None,
                               help="comma list of sizes for plot-data rows")
        if name == "oracle":
            p.add_argument("--n-seq", type=int, default=None, dest="n_seq")
            p.add_argument("--p", type=float, default=None)
    return parser


def _config_from_args(args) -> ExperimentConfig:
    values = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            file_cfg = ExperimentConfig.from_text(fh.read())
        if file_cfg.model != args.command:
            raise ConfigError(
                f"config file is for model {file_cfg.model!r}, not {args.command!r}",
                field="model")
        values.update(file_cfg.values)
    for key in _TYPES:
        attr = "enumerate_" if key == "enumerate" else key
        if hasattr(args, attr) and getattr(args, attr) is not None:
            values[key] = getattr(args, attr)
    cfg = ExperimentConfig(model=args.command, values=values)
    _validate(cfg)
    return cfg


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
        report = run_experiment(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except SteinPairsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = rpt.render(report, cfg.get("format"))
    out = cfg.get("out")
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
