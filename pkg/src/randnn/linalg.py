"""Dense linear-algebra kernel: ridge solvers and spectral estimates.

Matrices are plain ``numpy.ndarray`` objects (float64, C order). Ridge
problems accept 1-D or 2-D targets; the solution has the same number of
dimensions as the targets.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from ._backend import kernels
from .exceptions import DimensionError, RankDeficiencyError

POWER_MAX_ITER = 200
POWER_TOL = 1e-12


def as_matrix(a, name="matrix"):
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class RidgeProblem:
    """Least squares ``min ||H beta - y||^2 + lam ||beta||^2``."""

    design: np.ndarray
    targets: np.ndarray
    lam: float = 0.0

    def __post_init__(self):
        design = as_matrix(self.design, "design")
        targets = np.asarray(self.targets, dtype=np.float64)
        if targets.ndim not in (1, 2):
            raise DimensionError(f"targets must be 1-D or 2-D, got shape {targets.shape}")
        if targets.shape[0] != design.shape[0]:
            raise DimensionError(
                f"design has {design.shape[0]} rows but targets have {targets.shape[0]}"
            )
        if not np.all(np.isfinite(targets)):
            raise ValueError("targets contain non-finite entries")
        lam = float(self.lam)
        if not lam >= 0.0:
            raise ValueError(f"lambda must be nonnegative, got {self.lam}")
        object.__setattr__(self, "design", design)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "lam", lam)

    @property
    def shape(self):
        return self.design.shape


def _cholesky(gram, lam):
    try:
        return sla.cho_factor(gram, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise RankDeficiencyError(
            "regularized system is not positive definite"
            + (" (lambda=0 with rank-deficient design)" if lam == 0.0 else "")
        ) from exc


def ridge_solve_primal(p: RidgeProblem) -> np.ndarray:
    """``beta = (H^T H + lam I)^{-1} H^T y`` via Cholesky, one refinement step.

    Raises RankDeficiencyError when ``lam == 0`` and H lacks full column rank.
    """
    H, y, lam = p.design, p.targets, p.lam
    n_feat = H.shape[1]
    if lam == 0.0 and np.linalg.matrix_rank(H) < n_feat:
        raise RankDeficiencyError(
            f"design of shape {H.shape} is rank deficient and lambda is 0"
        )
    gram = H.T @ H
    gram[np.diag_indices(n_feat)] += lam
    rhs = H.T @ y
    factor = _cholesky(gram, lam)
    beta = sla.cho_solve(factor, rhs, check_finite=False)
    beta += sla.cho_solve(factor, rhs - gram @ beta, check_finite=False)
    return beta


def ridge_solve_dual(p: RidgeProblem) -> np.ndarray:
    """``beta = H^T (H H^T + lam I)^{-1} y``; requires ``lam > 0``."""
    if p.lam <= 0.0:
        raise ValueError("dual ridge solve requires lambda > 0 (the Gram matrix may be singular)")
    H, y = p.design, p.targets
    n_rows = H.shape[0]
    gram = H @ H.T
    gram[np.diag_indices(n_rows)] += p.lam
    factor = _cholesky(gram, p.lam)
    alpha = sla.cho_solve(factor, y, check_finite=False)
    alpha += sla.cho_solve(factor, y - gram @ alpha, check_finite=False)
    return H.T @ alpha


def ridge_path(p: RidgeProblem) -> str:
    """``"primal"`` when features do not outnumber samples, else ``"dual"``."""
    n_rows, n_feat = p.shape
    return "primal" if n_feat <= n_rows else "dual"


def ridge_solve(p: RidgeProblem) -> np.ndarray:
    if ridge_path(p) == "primal":
        return ridge_solve_primal(p)
    return ridge_solve_dual(p)


def _require_square(W):
    W = as_matrix(W, "W")
    if W.shape[0] != W.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {W.shape}")
    return W


def _power_estimate(A, max_iter, tol):
    """Dominant real eigenvalue by power iteration, or None if uncertified.

    Accepts the Rayleigh quotient only once the eigen-residual drops below
    ``tol`` times the matrix scale.
    """
    n = A.shape[0]
    scale = np.abs(A).max()
    if scale == 0.0:
        return 0.0
    v = np.random.default_rng(0).standard_normal(n)
    v /= np.linalg.norm(v)
    for _ in range(max_iter):
        y = A @ v
        mu = float(v @ y)
        if np.linalg.norm(y - mu * v) <= tol * scale:
            return mu
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return None
        v = y / ny
    return None


def eigvals(W) -> np.ndarray:
    """All eigenvalues of a square matrix via Hessenberg-QR (complex array)."""
    W = _require_square(W)
    wr, wi = kernels.hessenberg_eigvals(W)
    return wr + 1j * wi


def spectral_radius(W, *, method="auto", max_iter=POWER_MAX_ITER, tol=POWER_TOL) -> float:
    """Largest eigenvalue modulus of a square matrix.

    ``method="auto"`` tries, in order: the exact triangular case, a certified
    power-iteration estimate, then the Hessenberg-QR route, which also
    handles complex-conjugate dominant pairs (ring reservoirs).
    """
    W = _require_square(W)
    n = W.shape[0]
    if n == 0:
        raise DimensionError("empty matrix has no spectral radius")
    if method not in ("auto", "power", "qr"):
        raise ValueError(f"unknown method {method!r}")
    if method == "auto":
        if not np.any(np.tril(W, -1)) or not np.any(np.triu(W, 1)):
            return float(np.abs(np.diag(W)).max())
    if method in ("auto", "power"):
        mu = _power_estimate(W, max_iter, tol)
        if mu is not None:
            return abs(mu)
        if method == "power":
            raise ArithmeticError("power iteration did not converge")
    wr, wi = kernels.hessenberg_eigvals(W)
    return float(np.hypot(wr, wi).max())


def spectral_norm(W, *, max_iter=POWER_MAX_ITER, tol=POWER_TOL) -> float:
    """Largest singular value, from the dominant eigenvalue of the smaller Gram matrix."""
    W = as_matrix(W, "W")
    if W.size == 0:
        raise DimensionError("empty matrix has no spectral norm")
    gram = W.T @ W if W.shape[1] <= W.shape[0] else W @ W.T
    mu = _power_estimate(gram, max_iter, tol)
    if mu is None:
        wr, _ = kernels.hessenberg_eigvals(gram)
        mu = wr.max()
    return float(np.sqrt(max(mu, 0.0)))
