"""Dense symmetric linear algebra used by every bound.

All routines work on plain ``numpy`` arrays.  Symmetric inputs are validated
against a strict storage tolerance and symmetric outputs are re-symmetrized
so they are exactly symmetric as stored.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import NonsymmetricError, NotPSDError, SingularMatrixError

SYM_TOL = 1e-12
DEFAULT_COND_MAX = 1e12


def _as_square(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return M


def check_symmetric(S, tol: float = SYM_TOL) -> np.ndarray:
    """Validate stored symmetry of ``S`` and return it as a float array."""
    S = _as_square(S)
    asym = np.abs(S - S.T).max()
    if asym > tol:
        raise NonsymmetricError(f"stored asymmetry {asym:.3e} exceeds {tol:.0e}")
    return S


def symmetrize(S) -> np.ndarray:
    S = np.asarray(S, dtype=float)
    return (S + S.T) / 2.0


def psd_sqrt(S, tol_eig: float | None = None) -> np.ndarray:
    """Unique symmetric PSD square root of a symmetric PSD matrix.

    Eigenvalues in ``[-tol_eig, 0)`` are clamped to zero; anything below
    ``-tol_eig`` raises :class:`NotPSDError`.  The default tolerance scales
    with the mean eigenvalue, ``1e-10 * trace/d``, which tolerates the
    numerically singular covariance targets that arise when comparing against
    degenerate normals.
    """
    S = check_symmetric(S)
    d = S.shape[0]
    if tol_eig is None:
        tol_eig = 1e-10 * max(np.trace(S), 0.0) / d
    vals, vecs = np.linalg.eigh(symmetrize(S))
    if vals.min() < -tol_eig:
        raise NotPSDError(f"eigenvalue {vals.min():.3e} below -{tol_eig:.3e}")
    vals = np.clip(vals, 0.0, None)
    root = (vecs * np.sqrt(vals)) @ vecs.T
    return symmetrize(root)


def invert(M, cond_max: float = DEFAULT_COND_MAX) -> np.ndarray:
    """Inverse via partial-pivot LU; no pseudo-inverse fallback."""
    M = _as_square(M)
    d = M.shape[0]
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(M)
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise SingularMatrixError(str(exc)) from exc
    diag = np.abs(np.diag(lu))
    if np.abs(M).max() == 0.0 or diag.min() <= 1e-300:
        raise SingularMatrixError("zero pivot in LU factorization")
    inv = scipy.linalg.lu_solve((lu, piv), np.eye(d))
    cond = _norm_one(M) * _norm_one(inv)
    if not np.isfinite(cond) or cond > cond_max:
        raise SingularMatrixError(f"condition estimate {cond:.3e} exceeds {cond_max:.3e}")
    return inv


def _norm_one(M: np.ndarray) -> float:
    return float(np.abs(M).sum(axis=0).max())


def norms(M) -> tuple[float, float]:
    """(max-abs entry norm, induced 1-norm = max column absolute sum)."""
    M = _as_square(M)
    return float(np.abs(M).max()), _norm_one(M)


@dataclass(frozen=True)
class CovarianceModel:
    """A covariance matrix with its cached square roots and norms."""

    sigma: np.ndarray
    sqrt: np.ndarray = field(init=False)
    inv_sqrt: np.ndarray = field(init=False)
    maxabs: float = field(init=False)

    def __post_init__(self):
        sigma = check_symmetric(self.sigma)
        object.__setattr__(self, "sigma", sigma)
        root = psd_sqrt(sigma)
        object.__setattr__(self, "sqrt", root)
        object.__setattr__(self, "inv_sqrt", invert(root))
        object.__setattr__(self, "maxabs", float(np.abs(sigma).max()))

    @property
    def dim(self) -> int:
        return self.sigma.shape[0]
