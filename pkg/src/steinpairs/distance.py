"""Measured distributional distances and the Stein-equation machinery.

A battery of three-times-differentiable test functions with hand-certified
derivative sup-norms feeds both sides of the comparison: Monte Carlo
estimates of ``E h(W) - E h(S Z)`` on one side, the certified bounds on the
other.  The second-order equation characterizing the target normal is solved
numerically through the Gaussian-interpolant time integral and validated
against analytic solutions; the same smoothing underlies the non-smooth
bound diagnostics.
"""

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import ndtr

from .errors import SingularMatrixError
from .estimators import MONTE_CARLO, Estimate
from .linalg import check_symmetric, psd_sqrt
from .pairs import PairModel
from .util import batch_means_se, chunk_generators

SQRT2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class TestFunction:
    """A smooth test function with certified derivative sup-norms.

    ``h1``, ``h2``, ``h3`` bound, over all points and index tuples, the
    absolute first, second and third partial derivatives; they may be loose
    but are verified upper bounds (numeric partials are compared against them
    in the acceptance suite).
    """

    name: str
    family: str
    eval: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    h1: float
    h2: float
    h3: float

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.eval(x)

    @property
    def norms(self) -> tuple[float, float, float]:
        return (self.h1, self.h2, self.h3)


def _linear_composite(name, family, g, dg, bounds, u, b=0.0):
    """Test function ``g(u . x + b)`` with norms scaled by powers of max|u|."""
    u = np.asarray(u, dtype=float)
    s = float(np.abs(u).max())
    b1, b2, b3 = bounds

    def ev(x):
        return g(np.asarray(x, dtype=float) @ u + b)

    def gr(x):
        t = np.asarray(x, dtype=float) @ u + b
        return dg(t)[..., None] * u

    return TestFunction(name, family, ev, gr, b1 * s, b2 * s * s, b3 * s ** 3)


def _tanh_bounds():
    return (1.0, 0.76981, 2.0)


def _tanh_sq_bounds():
    return (0.76981, 2.0, 4.2)


def _tanh_cube_bounds():
    return (0.75, 1.45, 6.0)


def _ncdf_bounds(eps):
    # max |phi| = phi(0), max |phi'| = phi(1), max |phi''| = phi(0)
    return (0.398943 / eps, 0.241971 / eps ** 2, 0.398943 / eps ** 3)


def _unit(d, *idx_weight):
    u = np.zeros(d)
    for i, wgt in idx_weight:
        u[i] = wgt
    return u


def battery(d: int) -> list[TestFunction]:
    """Twelve test functions on R^d (d >= 2) with certified norms."""
    if d < 2:
        raise ValueError("the battery needs dimension at least 2")
    e0 = _unit(d, (0, 1.0))
    e1 = _unit(d, (1, 1.0))
    mix = _unit(d, (0, 1.0 / math.sqrt(2)), (1, 1.0 / math.sqrt(2)))
    tanh = np.tanh

    def d_tanh(t):
        return 1.0 - np.tanh(t) ** 2

    def tanh_sq(t):
        return np.tanh(t) ** 2

    def d_tanh_sq(t):
        u = np.tanh(t)
        return 2.0 * u * (1.0 - u * u)

    def tanh_cube(t):
        return np.tanh(t) ** 3

    def d_tanh_cube(t):
        u = np.tanh(t)
        return 3.0 * u * u * (1.0 - u * u)

    def ncdf(scale, shift=0.0):
        def g(t):
            return ndtr(scale * (t - shift))

        def dg(t):
            z = scale * (t - shift)
            return scale * np.exp(-0.5 * z * z) / SQRT2PI

        return g, dg

    phi1, dphi1 = ncdf(1.0)
    phi_mix, dphi_mix = ncdf(1.0, 0.5)
    phi_sharp, dphi_sharp = ncdf(2.0, 0.3)
    ident = (lambda t: t, lambda t: np.ones_like(t))

    funcs = [
        _linear_composite("coord-1", "coordinate map", *ident, (1.0, 0.0, 0.0), e0),
        _linear_composite("coord-diff", "coordinate map", *ident, (1.0, 0.0, 0.0),
                          (e0 - e1) / math.sqrt(2)),
        _linear_composite("tanh-1", "clipped polynomial", tanh, d_tanh,
                          _tanh_bounds(), e0),
        None,  # placeholder for the product function below
        _linear_composite("cubic-1", "clipped polynomial", tanh_cube, d_tanh_cube,
                          _tanh_cube_bounds(), e0),
        _linear_composite("cubic-mix", "clipped polynomial", tanh_cube, d_tanh_cube,
                          _tanh_cube_bounds(), mix),
        _linear_composite("halfspace-1", "smoothed indicator", phi1, dphi1,
                          _ncdf_bounds(1.0), e0),
        _linear_composite("halfspace-mix", "smoothed indicator", phi_mix, dphi_mix,
                          _ncdf_bounds(1.0), mix, b=0.0),
        _linear_composite("halfspace-sharp", "smoothed indicator", phi_sharp,
                          dphi_sharp, _ncdf_bounds(0.5), e0),
        _linear_composite("cos-mix", "trigonometric", np.cos,
                          lambda t: -np.sin(t), (1.0, 1.0, 1.0),
                          _unit(d, (0, 1.0), (1, 0.5))),
        _linear_composite("sin-mix", "trigonometric", np.sin, np.cos,
                          (1.0, 1.0, 1.0), _unit(d, (0, 0.7), (1, -0.4))),
        _linear_composite("tanh-sq", "clipped polynomial", tanh_sq, d_tanh_sq,
                          _tanh_sq_bounds(), e1),
    ]

    def prod_eval(x):
        x = np.asarray(x, dtype=float)
        return np.tanh(x[..., 0]) * np.tanh(x[..., 1])

    def prod_grad(x):
        x = np.asarray(x, dtype=float)
        g = np.zeros_like(x)
        g[..., 0] = d_tanh(x[..., 0]) * np.tanh(x[..., 1])
        g[..., 1] = np.tanh(x[..., 0]) * d_tanh(x[..., 1])
        return g

    funcs[3] = TestFunction("tanh-prod", "clipped polynomial", prod_eval, prod_grad,
                            1.0, 1.0, 2.0)
    return funcs


# ---------------------------------------------------------------------------
# distance estimation


def distance_estimate(sampler, sigma, h, n: int, seed: int) -> Estimate:
    """Monte Carlo estimate of ``E h(W) - E h(S Z)`` with a paired SE.

    ``sampler`` is either a :class:`PairModel` or a callable
    ``(rng, size) -> (size, d)``.  Both expectations use the common sample
    size; the standard error is that of the per-index differences.
    """
    sigma = check_symmetric(sigma)
    root = psd_sqrt(sigma)
    if isinstance(sampler, PairModel):
        model = sampler

        def draw(rng, size):
            return np.asarray(model.statistic(model.sample_configs(rng, size)), dtype=float)
    else:
        draw = sampler
    diffs = []
    for lo, hi, rng in chunk_generators(seed, n):
        w = draw(rng, hi - lo)
        z = rng.standard_normal(w.shape)
        diffs.append(np.asarray(h(w), dtype=float) - np.asarray(h(z @ root.T), dtype=float))
    diffs = np.concatenate(diffs)
    se = batch_means_se(diffs)
    if se == 0.0:
        se = float(np.nextafter(0.0, 1.0))
    return Estimate(float(diffs.mean()), se, MONTE_CARLO, n)


# ---------------------------------------------------------------------------
# quadrature helpers


def gauss_hermite_grid(d: int, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss-Hermite rule for the standard normal on R^d."""
    nodes, weights = np.polynomial.hermite_e.hermegauss(m)
    weights = weights / weights.sum()
    grids = np.meshgrid(*([nodes] * d), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    w = np.ones(pts.shape[0])
    for g in np.meshgrid(*([weights] * d), indexing="ij"):
        w *= g.ravel()
    return pts, w


def gauss_legendre_nodes(a: float, b: float, m: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(m)
    return 0.5 * (b - a) * nodes + 0.5 * (b + a), 0.5 * (b - a) * weights


def default_gh_order(d: int) -> int:
    return {1: 64, 2: 24, 3: 12}.get(d, 8)


# ---------------------------------------------------------------------------
# the Stein equation


@dataclass(frozen=True)
class SteinSolution:
    """Numeric solution of the second-order characterizing equation.

    Built as the time integral of the Gaussian interpolant between the point
    mass and the target normal; the construction is validated against the
    analytic special cases.  The quadrature spec is recorded for
    reproducibility.
    """

    h: Callable
    sigma: np.ndarray
    sigma_sqrt: np.ndarray
    eh_ref: float
    time_nodes: int
    gh_order: int
    _time_u: np.ndarray = field(repr=False, default=None)
    _time_w: np.ndarray = field(repr=False, default=None)
    _gh_pts: np.ndarray = field(repr=False, default=None)
    _gh_w: np.ndarray = field(repr=False, default=None)

    def __call__(self, w: np.ndarray) -> np.ndarray:
        w = np.atleast_2d(np.asarray(w, dtype=float))
        out = np.zeros(w.shape[0])
        sz = self._gh_pts @ self.sigma_sqrt.T
        for u, wq in zip(self._time_u, self._time_w):
            pts = u * w[:, None, :] + math.sqrt(max(1.0 - u * u, 0.0)) * sz[None, :, :]
            inner = np.asarray(self.h(pts), dtype=float) @ self._gh_w
            out += wq * (inner - self.eh_ref) / u
        return -out


def stein_solve(h, sigma, time_nodes: int = 48, gh_order: int | None = None) -> SteinSolution:
    """Solve ``grad^t Sigma grad f - w^t grad f = h - E h(S Z)`` numerically.

    Substituting the interpolation parameter ``u`` for time removes the
    integrable endpoint singularity, so plain Gauss-Legendre nodes converge
    fast for smooth h.
    """
    sigma = check_symmetric(sigma)
    vals = np.linalg.eigvalsh(sigma)
    if vals.min() <= 1e-12 * max(vals.max(), 1.0):
        raise SingularMatrixError("covariance must be positive definite")
    d = sigma.shape[0]
    if gh_order is None:
        gh_order = default_gh_order(d)
    tu, tw = gauss_legendre_nodes(0.0, 1.0, time_nodes)
    gp, gw = gauss_hermite_grid(d, gh_order)
    root = psd_sqrt(sigma)
    eh = float(np.asarray(h(gp @ root.T), dtype=float) @ gw)
    return SteinSolution(h=h, sigma=sigma, sigma_sqrt=root, eh_ref=eh,
                         time_nodes=time_nodes, gh_order=gh_order,
                         _time_u=tu, _time_w=tw, _gh_pts=gp, _gh_w=gw)


def _fd_gradient(f, w, step):
    d = w.shape[1]
    g = np.empty_like(w)
    for i in range(d):
        e = np.zeros(d)
        e[i] = step
        g[:, i] = (f(w + e) - f(w - e)) / (2.0 * step)
    return g


def _fd_hessian(f, w, step):
    n, d = w.shape
    H = np.empty((n, d, d))
    f0 = f(w)
    for i in range(d):
        ei = np.zeros(d)
        ei[i] = step
        H[:, i, i] = (f(w + ei) - 2.0 * f0 + f(w - ei)) / step ** 2
        for j in range(i + 1, d):
            ej = np.zeros(d)
            ej[j] = step
            val = (f(w + ei + ej) - f(w + ei - ej) - f(w - ei + ej)
                   + f(w - ei - ej)) / (4.0 * step ** 2)
            H[:, i, j] = val
            H[:, j, i] = val
    return H


def stein_residual(sol: SteinSolution, h, sigma, points,
                   fd_step: float = 2e-3) -> float:
    """RMS residual of the characterizing equation over the given points."""
    sigma = np.asarray(sigma, dtype=float)
    w = np.atleast_2d(np.asarray(points, dtype=float))
    grad = _fd_gradient(sol, w, fd_step)
    hess = _fd_hessian(sol, w, fd_step)
    lhs = np.einsum("ij,bij->b", sigma, hess) - np.einsum("bi,bi->b", w, grad)
    rhs = np.asarray(h(w), dtype=float) - sol.eh_ref
    return float(np.sqrt(np.mean((lhs - rhs) ** 2)))


def stein_derivative_excess(sol: SteinSolution, h_norms, points,
                            fd_step: float = 2e-3) -> tuple[float, float]:
    """Max positive excess of |f_i| over h1 and of |f_ij| over h2/2."""
    h1, h2, _ = h_norms
    w = np.atleast_2d(np.asarray(points, dtype=float))
    grad = _fd_gradient(sol, w, fd_step)
    hess = _fd_hessian(sol, w, fd_step)
    return (float(np.abs(grad).max() - h1), float(np.abs(hess).max() - h2 / 2.0))


# ---------------------------------------------------------------------------
# Gaussian smoothing and the smoothed-equation solution


class HalfSpaceIndicator:
    """Indicator of ``u . x <= b`` with closed-form Gaussian smoothing."""

    def __init__(self, u, b: float = 0.0):
        self.u = np.asarray(u, dtype=float)
        self.b = float(b)
        self.norm = float(np.linalg.norm(self.u))
        if self.norm == 0.0:
            raise ValueError("direction must be nonzero")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return (x @ self.u <= self.b).astype(float)

    def smoothed(self, s: float, x):
        x = np.asarray(x, dtype=float)
        proj = x @ self.u
        return ndtr((self.b - math.sqrt(1.0 - s) * proj) / (math.sqrt(s) * self.norm))

    @property
    def gauss_mean(self) -> float:
        return float(ndtr(self.b / self.norm))


def smooth_h(h, s: float, x, gh_order: int | None = None):
    """Gaussian smoothing ``E h(sqrt(s) Y + sqrt(1-s) x)`` with Y standard normal."""
    if not 0.0 < s < 1.0:
        raise ValueError("s must lie strictly between 0 and 1")
    if hasattr(h, "smoothed"):
        return h.smoothed(s, x)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    d = x.shape[1]
    if gh_order is None:
        gh_order = default_gh_order(d)
    gp, gw = gauss_hermite_grid(d, gh_order)
    pts = math.sqrt(s) * gp[None, :, :] + math.sqrt(1.0 - s) * x[:, None, :]
    return np.asarray(h(pts), dtype=float) @ gw


def gauss_mean(h, d: int, gh_order: int | None = None) -> float:
    """``E h(Z)`` for the standard normal on R^d."""
    if hasattr(h, "gauss_mean"):
        return h.gauss_mean
    if gh_order is None:
        gh_order = default_gh_order(d)
    gp, gw = gauss_hermite_grid(d, gh_order)
    return float(np.asarray(h(gp), dtype=float) @ gw)


def psi_t(h, t: float, x, d: int | None = None, time_nodes: int = 48) -> np.ndarray:
    """Solution of the characterizing equation for the smoothed function.

    Evaluates ``-(1/2) int_t^1 (h_s(x) - E h(Z)) / (1-s) ds`` with the
    substitution ``1 - s = v^2`` that removes the endpoint singularity.
    """
    if not 0.0 < t < 1.0:
        raise ValueError("t must lie strictly between 0 and 1")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if d is None:
        d = x.shape[1]
    ref = gauss_mean(h, d)
    vmax = math.sqrt(1.0 - t)
    nodes, weights = gauss_legendre_nodes(0.0, vmax, time_nodes)
    out = np.zeros(x.shape[0])
    for v, wq in zip(nodes, weights):
        s = 1.0 - v * v
        out += wq * 2.0 * (np.asarray(smooth_h(h, s, x), dtype=float) - ref) / v
    return -0.5 * out


def psi_second_derivative_max(h, t: float, points, fd_step: float = 1e-2,
                              time_nodes: int = 48) -> float:
    """Largest |second partial| of the smoothed-equation solution, by FD."""
    w = np.atleast_2d(np.asarray(points, dtype=float))

    def f(x):
        return psi_t(h, t, x, time_nodes=time_nodes)

    hess = _fd_hessian(f, w, fd_step)
    return float(np.abs(hess).max())


def psi_growth_probe(h, ts, direction, time_nodes: int = 96) -> list[float]:
    """Second-derivative sup of the smoothed solution at decreasing t.

    The sharp feature of a smoothed indicator lives at scale sqrt(t), so the
    probe points and the finite-difference step both scale with sqrt(t);
    fixed-grid probes would saturate and miss the logarithmic growth.
    """
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    rel = np.array([0.2, 0.4, 0.7, 1.0, 1.5, 2.2, 3.0])
    out = []
    for t in ts:
        scaled = (rel * math.sqrt(t))[:, None] * direction[None, :]
        pts = np.concatenate([scaled, -scaled,
                              np.array([0.5, 1.0, 2.0])[:, None] * direction[None, :]])
        out.append(psi_second_derivative_max(h, t, pts,
                                             fd_step=0.05 * math.sqrt(t),
                                             time_nodes=time_nodes))
    return out
