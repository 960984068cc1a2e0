"""Dynamical-richness diagnostics for reservoirs.

Standard definitions are used where the literature leaves formulas open:

* memory capacity: sum over delays of the squared correlation between the
  delayed input and its linear reconstruction from the state, measured on a
  held-out tail of the run;
* state entropy: differential entropy of a Gaussian fitted to the states;
* local Lyapunov spectrum: time-averaged log stretch factors of the driven
  trajectory's Jacobian product, re-orthonormalized by QR.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from . import linalg
from .deepesn import DeepReservoir, _deep_states
from .exceptions import DimensionError
from .reservoir import ReservoirLayer, StateTrace, _as_series, _states, default_washout

TEST_FRACTION = 0.3
LOG_FLOOR = np.log(np.finfo(np.float64).tiny)


@dataclass(frozen=True)
class MemoryCapacityReport:
    r2: np.ndarray
    input_range: float = 0.8

    @property
    def total(self):
        return float(self.r2.sum())

    @property
    def delays(self):
        return np.arange(1, self.r2.size + 1)


@dataclass(frozen=True)
class LyapunovReport:
    exponents: np.ndarray
    window: int
    floored: bool = False

    @property
    def max_exponent(self):
        return float(self.exponents[0])


def _system_states(system, X, linear):
    if isinstance(system, ReservoirLayer):
        return _deep_states(DeepReservoir((system,)), X, linear=linear)[0]
    if isinstance(system, DeepReservoir):
        return np.hstack(_deep_states(system, X, linear=linear))
    raise TypeError(f"expected ReservoirLayer or DeepReservoir, got {type(system).__name__}")


def _squared_correlation(a, b):
    a = a - a.mean()
    b = b - b.mean()
    denom = float(np.dot(a, a) * np.dot(b, b))
    if denom <= 0.0:
        return 0.0
    return min(1.0, float(np.dot(a, b)) ** 2 / denom)


def memory_capacity(
    system,
    K=40,
    T=None,
    seed=0,
    activation="tanh",
    washout=None,
    lam=1e-9,
    input_range=0.8,
) -> MemoryCapacityReport:
    """Short-term memory capacity under i.i.d. uniform scalar input.

    For each delay ``k = 1..K`` a ridge readout (with intercept) is fitted on
    the first 70% of the post-washout states to reproduce ``x(t-k)``;
    ``r2[k-1]`` is the squared correlation on the remaining 30%.
    ``activation="linear"`` replaces tanh by the identity.
    """
    if activation not in ("tanh", "linear"):
        raise ValueError(f"unknown activation {activation!r}")
    T = 20 * K if T is None else int(T)
    if T < 20 * K:
        raise ValueError(f"need T >= 20*K = {20 * K} steps, got {T}")
    layers = system.layers if isinstance(system, DeepReservoir) else (system,)
    if layers[0].input_dim != 1:
        raise DimensionError("memory capacity needs a scalar-input system")
    n_state = sum(layer.n_units for layer in layers)
    if K >= n_state:
        warnings.warn(f"K={K} delays exceed the state dimension {n_state}; capacity is bounded by it", stacklevel=2)
    washout = default_washout(T) if washout is None else int(washout)
    x = np.random.default_rng(seed).uniform(-input_range, input_range, T)
    S = _system_states(system, x[:, None], activation == "linear")
    start = max(washout, K)
    rows = np.arange(start, T)
    design = np.hstack([np.ones((rows.size, 1)), S[rows]])
    n_train = rows.size - int(round(TEST_FRACTION * rows.size))
    train, test = slice(0, n_train), slice(n_train, None)
    targets = np.stack([x[rows - k] for k in range(1, K + 1)], axis=1)
    beta = linalg.ridge_solve(linalg.RidgeProblem(design[train], targets[train], lam))
    pred = design[test] @ beta
    r2 = np.array([_squared_correlation(targets[test, k], pred[:, k]) for k in range(K)])
    return MemoryCapacityReport(r2, float(input_range))


def state_entropy(trace, eps=1e-12) -> float:
    """``0.5 * log det(2 pi e (Sigma + eps I))`` of the state covariance.

    ``trace`` is a ``StateTrace`` (washout rows dropped) or a (T x N) array.
    """
    S = trace.usable if isinstance(trace, StateTrace) else np.asarray(trace, dtype=np.float64)
    T, n = S.shape
    if T <= n:
        raise ValueError(f"need more time steps ({T}) than state dimensions ({n})")
    cov = np.atleast_2d(np.cov(S, rowvar=False))
    cov[np.diag_indices(n)] += eps
    sign, logdet = np.linalg.slogdet(2.0 * np.pi * np.e * cov)
    if sign <= 0:
        raise ArithmeticError("covariance is not positive definite even with jitter")
    return 0.5 * float(logdet)


def local_lyapunov_spectrum(
    layer: ReservoirLayer,
    series,
    m=None,
    window=None,
    h0=None,
    activation="tanh",
    reorth_every=1,
) -> LyapunovReport:
    """Leading ``m`` local Lyapunov exponents along the driven trajectory.

    Jacobians ``J(t) = diag(1 - h(t)^2) W_R^T`` (``W_R^T`` for the linear
    activation) are applied to an orthonormal frame, re-orthonormalized by QR
    every ``reorth_every`` steps; exponents are the log stretch factors
    summed over the last ``window`` steps and divided by ``window``, sorted
    descending. Zero stretch (nilpotent Jacobians) is floored at
    ``log(tiny)`` per step and flagged.
    """
    X = _as_series(series, layer.input_dim)
    T = X.shape[0]
    n = layer.n_units
    m = n if m is None else int(m)
    window = T if window is None else int(window)
    if not 1 <= m <= n:
        raise ValueError(f"m must lie in [1, {n}]")
    if not 1 <= window <= T:
        raise ValueError(f"window must lie in [1, {T}]")
    if reorth_every < 1:
        raise ValueError("reorth_every must be positive")
    linear = activation == "linear"
    S = _states(layer, X, h0, linear)
    WRt = layer.W_R.T
    Q = np.linalg.qr(np.random.default_rng(0).standard_normal((n, m)))[0]
    logs = np.zeros(m)
    floored = False
    pending = 0
    for t in range(T - window, T):
        J = WRt if linear else (1.0 - S[t] ** 2)[:, None] * WRt
        Q = J @ Q
        pending += 1
        if pending == reorth_every or t == T - 1:
            Q, R = np.linalg.qr(Q)
            d = np.abs(np.diag(R))
            tiny = d <= np.finfo(np.float64).tiny
            if tiny.any():
                floored = True
            logs += np.where(tiny, LOG_FLOOR, np.log(np.where(tiny, 1.0, d)))
            pending = 0
    return LyapunovReport(np.sort(logs / window)[::-1], window, floored)
