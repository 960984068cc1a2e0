"""Feed-forward randomized networks.

RVFL expansion ``h_i(x) = sigmoid(w_i . x + b_i)`` with optional constant and
direct-link features, linear readouts trained by ridge, logistic or l1
objectives, semi-random features, and the stacked-autoencoder recipe for
deep RVFL networks.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from . import linalg
from .distributions import Uniform, derive_seed, parse_distribution
from .exceptions import ConvergenceWarning, DimensionError


@dataclass(frozen=True)
class RVFLParams:
    W: np.ndarray
    b: np.ndarray
    include_direct_links: bool = True
    include_bias_feature: bool = True
    seed: int = 0
    dist: object = Uniform()

    @property
    def input_dim(self):
        return self.W.shape[0]

    @property
    def hidden_dim(self):
        return self.W.shape[1]

    @property
    def n_features(self):
        return (
            self.hidden_dim
            + int(self.include_bias_feature)
            + (self.input_dim if self.include_direct_links else 0)
        )


@dataclass(frozen=True)
class Readout:
    """Trained linear output weights.

    ``predict`` returns ``H @ beta`` for squared and l1 losses, and class-1
    probabilities for the logistic loss.
    """

    beta: np.ndarray
    lam: float
    loss_kind: str = "squared"
    converged: bool = True
    n_iter: int = 0
    history: tuple = field(default=(), repr=False, compare=False)

    @property
    def n_nonzero(self):
        return int(np.count_nonzero(self.beta))

    def decision_function(self, H):
        return np.asarray(H, dtype=np.float64) @ self.beta

    def predict(self, H):
        z = self.decision_function(H)
        return expit(z) if self.loss_kind == "logistic" else z


@dataclass(frozen=True)
class SemiRandomParams:
    R: np.ndarray
    s: int = 1

    def __post_init__(self):
        if int(self.s) != self.s or self.s < 1:
            raise ValueError(f"exponent s must be a positive integer, got {self.s}")


def init_rvfl(
    input_dim,
    hidden_dim,
    dist=Uniform(),
    seed=0,
    include_direct_links=True,
    include_bias_feature=True,
) -> RVFLParams:
    """Draw ``W`` (input_dim x hidden_dim) then ``b`` i.i.d. from ``dist``."""
    if input_dim <= 0 or hidden_dim <= 0:
        raise ValueError(f"dimensions must be positive, got ({input_dim}, {hidden_dim})")
    dist = parse_distribution(dist)
    rng = np.random.default_rng(seed)
    W = dist.sample(rng, (input_dim, hidden_dim))
    b = dist.sample(rng, (hidden_dim,))
    return RVFLParams(W, b, bool(include_direct_links), bool(include_bias_feature), int(seed), dist)


def _affine(X, W, b):
    # Accumulate column by column so every row is computed independently of
    # how the rows are batched (BLAS blocking would not guarantee this).
    Z = np.empty((X.shape[0], W.shape[1]))
    Z[:] = b
    for d in range(W.shape[0]):
        Z += X[:, d, None] * W[d]
    return Z


def _check_input(X, input_dim):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != input_dim:
        raise DimensionError(f"expected inputs with {input_dim} columns, got shape {X.shape}")
    return X


def expand(p: RVFLParams, X) -> np.ndarray:
    """Feature matrix ``[1 | X | sigmoid(X W + b)]`` with optional blocks omitted."""
    X = _check_input(X, p.input_dim)
    blocks = []
    if p.include_bias_feature:
        blocks.append(np.ones((X.shape[0], 1)))
    if p.include_direct_links:
        blocks.append(X)
    blocks.append(expit(_affine(X, p.W, p.b)))
    return np.hstack(blocks)


def train_ridge(H, y, lam) -> Readout:
    beta = linalg.ridge_solve(linalg.RidgeProblem(H, y, lam))
    return Readout(beta, float(lam), "squared")


def _logistic_objective(H, y, beta, lam):
    z = H @ beta
    return float(np.sum(np.logaddexp(0.0, z) - y * z) + lam * np.sum(beta * beta))


def train_logistic(H, y, lam, max_iter=5000, tol=1e-6) -> Readout:
    """Regularized cross-entropy readout by gradient descent with backtracking.

    Minimizes ``sum log(1 + e^z) - y z + lam ||beta||^2`` with ``z = H beta``.
    Stops once the gradient norm is at most ``tol``; otherwise warns and
    returns the last (best) iterate with ``converged=False``.
    """
    H = linalg.as_matrix(H, "H")
    y = np.asarray(y, dtype=np.float64)
    if y.shape[0] != H.shape[0] or y.ndim not in (1, 2):
        raise DimensionError(f"labels of shape {y.shape} do not match design {H.shape}")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise ValueError("logistic readout needs labels in {0, 1}")
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    beta = np.zeros((H.shape[1],) + y.shape[1:])
    f = _logistic_objective(H, y, beta, lam)
    history = [f]
    lipschitz = 0.25 * linalg.spectral_norm(H) ** 2 + 2.0 * lam
    step = 1.0 / lipschitz if lipschitz > 0 else 1.0
    converged = False
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        g = H.T @ (expit(H @ beta) - y) + 2.0 * lam * beta
        gnorm2 = float(np.sum(g * g))
        if np.sqrt(gnorm2) <= tol:
            converged = True
            n_iter -= 1
            break
        t = 2.0 * step
        stalled = False
        while True:
            cand = beta - t * g
            fc = _logistic_objective(H, y, cand, lam)
            if fc <= f - 0.5 * t * gnorm2 and fc < f:
                break
            t *= 0.5
            if t < 1e-16:
                # sufficient decrease is below the objective's rounding error
                stalled = True
                break
        if stalled:
            break
        beta, f, step = cand, fc, t
        history.append(f)
    if not converged:
        reason = "line search stalled at machine precision" if stalled else f"stopped after {max_iter} iterations"
        warnings.warn(
            f"logistic readout did not reach gradient norm {tol}: {reason}",
            ConvergenceWarning,
            stacklevel=2,
        )
    return Readout(beta, float(lam), "logistic", converged, n_iter, tuple(history))


def _soft_threshold(v, thresh):
    return np.sign(v) * np.maximum(np.abs(v) - thresh, 0.0)


def train_l1(H, y, lam, max_iter=100000, tol=1e-12) -> Readout:
    """Sparse readout minimizing ``||H beta - y||^2 + lam ||beta||_1``.

    Proximal gradient with fixed step ``1/L``, ``L = 2 ||H||_2^2`` the
    Lipschitz constant of the smooth part; stops when the relative
    objective decrease falls to ``tol``.
    """
    H = linalg.as_matrix(H, "H")
    y = np.asarray(y, dtype=np.float64)
    if y.shape[0] != H.shape[0] or y.ndim not in (1, 2):
        raise DimensionError(f"targets of shape {y.shape} do not match design {H.shape}")
    if not lam > 0:
        raise ValueError(f"l1 readout needs lambda > 0, got {lam}")
    lipschitz = 2.0 * linalg.spectral_norm(H) ** 2
    beta = np.zeros((H.shape[1],) + y.shape[1:])

    def objective(b):
        r = H @ b - y
        return float(np.sum(r * r) + lam * np.sum(np.abs(b)))

    if lipschitz == 0.0:
        return Readout(beta, float(lam), "l1", True, 0, (objective(beta),))
    f = objective(beta)
    history = [f]
    converged = False
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        grad = 2.0 * (H.T @ (H @ beta - y))
        beta = _soft_threshold(beta - grad / lipschitz, lam / lipschitz)
        f_new = objective(beta)
        history.append(f_new)
        if f - f_new <= tol * max(1.0, abs(f)):
            converged = True
            f = f_new
            break
        f = f_new
    if not converged:
        warnings.warn(
            f"l1 readout did not converge in {max_iter} iterations",
            ConvergenceWarning,
            stacklevel=2,
        )
    return Readout(beta, float(lam), "l1", converged, n_iter, tuple(history))


def train_readout(H, y, lam, loss="squared", **kwargs) -> Readout:
    if loss == "squared":
        return train_ridge(H, y, lam)
    if loss == "logistic":
        return train_logistic(H, y, lam, **kwargs)
    if loss == "l1":
        return train_l1(H, y, lam, **kwargs)
    raise ValueError(f"unknown loss {loss!r}")


def step_power(z, s):
    """``z**s`` for ``z > 0`` and 0 otherwise."""
    z = np.asarray(z, dtype=np.float64)
    return np.where(z > 0.0, z, 0.0) ** s


def init_semi_random(input_dim, hidden_dim, s=1, dist=Uniform(), seed=0) -> SemiRandomParams:
    if input_dim <= 0 or hidden_dim <= 0:
        raise ValueError(f"dimensions must be positive, got ({input_dim}, {hidden_dim})")
    rng = np.random.default_rng(seed)
    return SemiRandomParams(parse_distribution(dist).sample(rng, (input_dim, hidden_dim)), int(s))


def semi_random_expand(sp: SemiRandomParams, X) -> np.ndarray:
    """Blocks ``step_power(r_i . x, s) * x``, laid out block-major (N x B*D).

    A linear readout ``v`` on these features realizes
    ``f(x) = sum_i step_power(r_i . x, s) * (v_i . x)``, with the trainable
    per-unit weights ``v_i = v[i*D:(i+1)*D]``.
    """
    X = _check_input(X, sp.R.shape[0])
    gates = step_power(X @ sp.R, sp.s)
    n, d = X.shape
    return (gates[:, :, None] * X[:, None, :]).reshape(n, sp.R.shape[1] * d)


@dataclass(frozen=True)
class AutoencoderStack:
    """Deep RVFL encoder built layer by layer from random autoencoders.

    ``weights[l]`` has shape ``(d_in, layer_dims[l])``; the forward map is
    ``Z <- activation(Z @ weights[l])``.
    """

    weights: tuple
    activation: str = "tanh"
    reconstruction_errors: tuple = ()

    def transform(self, X):
        Z = np.asarray(X, dtype=np.float64)
        for M in self.weights:
            Z = _ACTIVATIONS[self.activation](Z @ M)
        return Z


_ACTIVATIONS = {"tanh": np.tanh, "sigmoid": expit, "identity": lambda z: z}


def stack_autoencoders(
    X,
    layer_dims,
    lam=1e-3,
    dist=Uniform(),
    seed=0,
    solver="ridge",
    noise_std=0.0,
    activation="tanh",
) -> AutoencoderStack:
    """Build encoder weights with the random-autoencoder recipe.

    For each layer: draw a random map ``h`` (sigmoid features plus a constant
    feature), fit a readout ``beta`` from ``h(Z)`` back to ``Z``, adopt the
    hidden-unit rows of ``beta`` transposed as the layer's forward weights,
    and recurse on the resulting embedding. The constant feature's row is the
    decoder offset and is not part of the encoder.

    ``solver`` selects ridge or l1 readouts; ``noise_std > 0`` feeds a
    Gaussian-corrupted input to ``h`` while still reconstructing the clean one.
    """
    if not layer_dims:
        raise ValueError("layer_dims must be nonempty")
    if activation not in _ACTIVATIONS:
        raise ValueError(f"unknown activation {activation!r}")
    Z = linalg.as_matrix(X, "X")
    noise_rng = np.random.default_rng(derive_seed(seed, len(layer_dims) + 1))
    weights, errors = [], []
    for layer, width in enumerate(layer_dims):
        params = init_rvfl(
            Z.shape[1], int(width), dist, derive_seed(seed, layer),
            include_direct_links=False, include_bias_feature=True,
        )
        source = Z + noise_rng.normal(0.0, noise_std, Z.shape) if noise_std > 0 else Z
        H = expand(params, source)
        readout = train_readout(H, Z, lam, "squared" if solver == "ridge" else solver)
        errors.append(float(np.mean((H @ readout.beta - Z) ** 2)))
        M = np.ascontiguousarray(readout.beta[1:].T)
        weights.append(M)
        Z = _ACTIVATIONS[activation](Z @ M)
    return AutoencoderStack(tuple(weights), activation, tuple(errors))
