"""Shallow echo state networks.

State update ``h(t) = tanh(W^T x(t) + W_R^T h(t-1))``. Row-vector
convention throughout: ``W`` is (D x N), ``W_R`` is (N x N), states are rows
of a (T x N) matrix and the update is ``tanh(x @ W + h @ W_R)``.
"""

import re
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.spatial.distance import pdist

from . import linalg
from ._backend import kernels
from .distributions import Uniform, parse_distribution
from .exceptions import DimensionError, ScalingError

TOPOLOGY_KINDS = ("dense", "sparse", "ring", "multi_ring", "chain")


@dataclass(frozen=True)
class Topology:
    """Recurrent connectivity pattern.

    ``ring_signs`` applies to ring, multi-ring and chain: ``"positive"`` puts
    +1 on every cycle edge before scaling; ``"random"`` draws each sign.
    """

    kind: str = "dense"
    density: float = 1.0
    cycles: int = 1
    ring_signs: str = "positive"

    def __post_init__(self):
        if self.kind not in TOPOLOGY_KINDS:
            raise ValueError(f"unknown topology {self.kind!r}")
        if not 0.0 < self.density <= 1.0:
            raise ValueError(f"density must lie in (0, 1], got {self.density}")
        if int(self.cycles) != self.cycles or self.cycles < 1:
            raise ValueError(f"cycles must be a positive integer, got {self.cycles}")
        if self.ring_signs not in ("positive", "random"):
            raise ValueError(f"ring_signs must be 'positive' or 'random', got {self.ring_signs!r}")

    @property
    def structured(self):
        return self.kind in ("ring", "multi_ring", "chain")

    def __str__(self):
        if self.kind == "sparse":
            return f"sparse({self.density:g})"
        if self.kind == "multi_ring":
            return f"multi_ring({self.cycles})"
        return self.kind


_TOPO_PATTERN = re.compile(r"^\s*(\w+)\s*(?:\(\s*([^)]*)\s*\))?\s*$")


def parse_topology(text):
    """Parse ``dense``, ``sparse(0.1)``, ``ring``, ``multi_ring(3)`` or ``chain``."""
    if isinstance(text, Topology):
        return text
    m = _TOPO_PATTERN.match(str(text))
    if m is None:
        raise ValueError(f"cannot parse topology {text!r}")
    kind, arg = m.group(1), m.group(2)
    if kind == "sparse":
        return Topology("sparse", density=float(arg) if arg else 0.1)
    if kind == "multi_ring":
        return Topology("multi_ring", cycles=int(arg) if arg else 2)
    if arg:
        raise ValueError(f"topology {kind!r} takes no parameter")
    return Topology(kind)


@dataclass(frozen=True)
class ReservoirLayer:
    W: np.ndarray
    W_R: np.ndarray
    topology: Topology = Topology()
    scaling_mode: str = "rho"
    target: float = 0.9
    input_scaling: float = 1.0
    seed: int = 0
    bias: Optional[np.ndarray] = None

    @property
    def n_units(self):
        return self.W_R.shape[0]

    @property
    def input_dim(self):
        return self.W.shape[0]

    def drive(self, X):
        """Input contribution ``X @ W (+ bias)`` for a (T x D) input matrix."""
        U = X @ self.W
        if self.bias is not None:
            U += self.bias
        return U


@dataclass(frozen=True)
class StateTrace:
    states: np.ndarray
    washout: int = 0

    @property
    def usable(self):
        return self.states[self.washout:]

    def __len__(self):
        return self.states.shape[0]


class ConditionCheck(NamedTuple):
    holds: bool
    value: float


class ESPResult(NamedTuple):
    converged: bool
    distance_trace: np.ndarray


def _cycle_blocks(n, cycles):
    sizes = [n // cycles + (1 if i < n % cycles else 0) for i in range(cycles)]
    start = 0
    for size in sizes:
        yield np.arange(start, start + size)
        start += size


def _raw_recurrent(n, topology, rng):
    """Unscaled recurrent matrix; structured kinds carry unit-modulus entries."""
    W_R = np.zeros((n, n))
    if topology.kind == "dense":
        W_R[:] = rng.uniform(-1.0, 1.0, (n, n))
    elif topology.kind == "sparse":
        mask = rng.random((n, n)) < topology.density
        W_R[mask] = rng.uniform(-1.0, 1.0, int(mask.sum()))
    else:
        if topology.kind == "multi_ring" and topology.cycles > n:
            raise ValueError(f"cannot form {topology.cycles} cycles from {n} units")
        cycles = topology.cycles if topology.kind == "multi_ring" else 1
        for block in _cycle_blocks(n, cycles):
            src = block
            dst = np.roll(block, -1)
            if topology.kind == "chain":
                src, dst = src[:-1], dst[:-1]
            # unit dst[k] feeds unit src[k]: entry W_R[dst, src]
            W_R[dst, src] = 1.0
        if topology.ring_signs == "random":
            W_R *= np.where(rng.random((n, n)) < 0.5, -1.0, 1.0)
    return W_R


def _raw_measure(W_R, topology, mode):
    if topology.structured:
        # signed permutation (ring, multi-ring) or partial one (chain)
        if topology.kind == "chain":
            return 0.0 if mode == "rho" else (1.0 if W_R.shape[0] > 1 else 0.0)
        return 1.0
    return linalg.spectral_radius(W_R) if mode == "rho" else linalg.spectral_norm(W_R)


def init_reservoir(
    n_units,
    input_dim,
    topology=Topology(),
    rho=None,
    norm=None,
    input_scaling=1.0,
    dist=Uniform(),
    seed=0,
    bias_scaling=0.0,
) -> ReservoirLayer:
    """Draw and rescale a reservoir layer.

    Exactly one of ``rho`` (target spectral radius) and ``norm`` (target
    spectral norm) may be given; ``rho=0.9`` when neither is. The recurrent
    matrix is drawn first, then the input matrix (``dist`` times
    ``input_scaling``), then the optional bias.
    """
    if n_units <= 0 or input_dim <= 0:
        raise ValueError(f"dimensions must be positive, got ({n_units}, {input_dim})")
    if rho is not None and norm is not None:
        raise ValueError("give either rho or norm, not both")
    mode, target = ("norm", norm) if norm is not None else ("rho", 0.9 if rho is None else rho)
    target = float(target)
    if not target > 0:
        raise ValueError(f"scaling target must be positive, got {target}")
    topology = parse_topology(topology)
    dist = parse_distribution(dist)
    rng = np.random.default_rng(seed)
    W_R = _raw_recurrent(n_units, topology, rng)
    measured = _raw_measure(W_R, topology, mode)
    if measured == 0.0:
        hint = " (nilpotent recurrent matrix; use norm scaling)" if mode == "rho" else ""
        raise ScalingError(f"raw recurrent matrix has zero {mode}; cannot rescale{hint}")
    W_R *= target / measured
    W = dist.sample(rng, (input_dim, n_units)) * float(input_scaling)
    bias = dist.sample(rng, (n_units,)) * float(bias_scaling) if bias_scaling else None
    return ReservoirLayer(W, W_R, topology, mode, target, float(input_scaling), int(seed), bias)


def _as_series(series, input_dim):
    X = np.asarray(series, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None] if input_dim == 1 else X[None, :]
    if X.ndim != 2 or X.shape[1] != input_dim:
        raise DimensionError(f"expected a series with {input_dim} columns, got shape {X.shape}")
    if X.shape[0] == 0:
        raise ValueError("empty input series")
    return X


def default_washout(T):
    return min(100, T // 10)


def step(layer: ReservoirLayer, x_t, h_prev) -> np.ndarray:
    x_t = np.asarray(x_t, dtype=np.float64).reshape(-1)
    h_prev = np.asarray(h_prev, dtype=np.float64).reshape(-1)
    if x_t.shape[0] != layer.input_dim or h_prev.shape[0] != layer.n_units:
        raise DimensionError(
            f"expected input of size {layer.input_dim} and state of size {layer.n_units}"
        )
    u = x_t @ layer.W
    if layer.bias is not None:
        u = u + layer.bias
    return np.tanh(u + h_prev @ layer.W_R)


def _states(layer, X, h0=None, linear=False):
    n = layer.n_units
    h0 = np.zeros(n) if h0 is None else np.asarray(h0, dtype=np.float64).reshape(-1)
    if h0.shape[0] != n:
        raise DimensionError(f"initial state must have {n} entries")
    return kernels.series_states(layer.drive(X), layer.W_R, h0, linear)


def run(layer: ReservoirLayer, series, h0=None, washout=None) -> StateTrace:
    """Drive the layer with a (T x D) series; the first ``washout`` rows are transient.

    ``washout`` defaults to ``min(100, T // 10)``.
    """
    X = _as_series(series, layer.input_dim)
    T = X.shape[0]
    washout = default_washout(T) if washout is None else int(washout)
    if not 0 <= washout < T:
        raise ValueError(f"washout must lie in [0, {T}), got {washout}")
    return StateTrace(_states(layer, X, h0), washout)


def check_sufficient(layer: ReservoirLayer) -> ConditionCheck:
    """Contraction condition ``||W_R||_2 < 1``."""
    value = linalg.spectral_norm(layer.W_R)
    return ConditionCheck(value < 1.0, value)


def check_necessary(layer: ReservoirLayer) -> ConditionCheck:
    """Zero-input stability condition ``rho(W_R) < 1``."""
    value = linalg.spectral_radius(layer.W_R)
    return ConditionCheck(value < 1.0, value)


def max_pairwise_distance(batch):
    if batch.shape[0] < 2:
        return 0.0
    return float(pdist(batch).max())


def batch_distance_trace(step_batch, H, T):
    """Max pairwise distance of a batch of states before and after each step."""
    trace = np.empty(T + 1)
    trace[0] = max_pairwise_distance(H)
    for t in range(T):
        H = step_batch(t, H)
        trace[t + 1] = max_pairwise_distance(H)
    return trace


def check_esp_empirical(layer: ReservoirLayer, series, trials=10, tol=1e-6, seed=0) -> ESPResult:
    """Falsification test of the echo state property on one input series.

    Runs ``trials`` copies of the layer from initial states drawn uniformly
    in (-1, 1)^N. ``distance_trace[t]`` is the largest pairwise Euclidean
    distance after ``t`` steps (index 0 is the initial spread). Convergence
    on sampled inputs is evidence, not proof.
    """
    if trials < 2:
        raise ValueError("need at least two trials")
    X = _as_series(series, layer.input_dim)
    U = layer.drive(X)
    H = np.random.default_rng(seed).uniform(-1.0, 1.0, (trials, layer.n_units))
    trace = batch_distance_trace(lambda t, H: np.tanh(U[t] + H @ layer.W_R), H, X.shape[0])
    return ESPResult(bool(trace[-1] < tol), trace)
