"""Deep echo state networks.

Layer 1 is driven by the external input and layer ``l > 1`` by the state of
layer ``l - 1`` at the same time step:

    h^1(t) = tanh(x(t) @ W^1 + h^1(t-1) @ W_R^1)
    h^l(t) = tanh(h^{l-1}(t) @ W^l + h^l(t-1) @ W_R^l)

Because the coupling is strictly feed-forward across layers, a whole trace
is computed one layer at a time.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import linalg
from .distributions import Uniform, derive_seed
from .exceptions import DimensionError
from .reservoir import (
    ConditionCheck,
    ESPResult,
    StateTrace,
    Topology,
    _as_series,
    _states,
    batch_distance_trace,
    default_washout,
    init_reservoir,
    step,
)

READOUT_MODES = ("all_layers", "last_layer")


@dataclass(frozen=True)
class DeepReservoir:
    layers: tuple
    inter_layer_scaling: float = 1.0

    def __post_init__(self):
        if len(self.layers) < 1:
            raise ValueError("a deep reservoir needs at least one layer")
        for below, above in zip(self.layers, self.layers[1:]):
            if above.input_dim != below.n_units:
                raise DimensionError(
                    f"layer of {below.n_units} units cannot feed a layer expecting {above.input_dim} inputs"
                )

    @property
    def n_layers(self):
        return len(self.layers)

    @property
    def sizes(self):
        return [layer.n_units for layer in self.layers]

    @property
    def input_dim(self):
        return self.layers[0].input_dim


def _per_layer(value, L, name):
    if value is None or np.isscalar(value):
        return [value] * L
    values = list(value)
    if len(values) != L:
        raise ValueError(f"{name} has {len(values)} entries for {L} layers")
    return values


def init_deep(
    layer_sizes,
    per_layer_rho=0.9,
    inter_layer_scaling=1.0,
    input_dim=1,
    dist=Uniform(),
    seed=0,
    topology=Topology(),
    input_scaling=1.0,
    per_layer_norm=None,
    bias_scaling=0.0,
) -> DeepReservoir:
    """Stack ``len(layer_sizes)`` reservoirs.

    Layer 1 is built exactly as ``init_reservoir`` would with the same seed,
    so a one-layer stack reproduces the shallow network. Layer ``l > 1``
    uses a seed derived from ``(seed, l)`` and ``inter_layer_scaling`` as its
    input scaling. Scalars for ``per_layer_rho``/``per_layer_norm``/``topology``
    apply to every layer.
    """
    sizes = [int(s) for s in layer_sizes]
    L = len(sizes)
    if L < 1:
        raise ValueError("layer_sizes must be nonempty")
    norms = _per_layer(per_layer_norm, L, "per_layer_norm")
    rhos = _per_layer(None if per_layer_norm is not None else per_layer_rho, L, "per_layer_rho")
    topologies = [topology] * L if isinstance(topology, (str, Topology)) else list(topology)
    if len(topologies) != L:
        raise ValueError(f"topology has {len(topologies)} entries for {L} layers")
    layers = []
    for l in range(L):
        layers.append(
            init_reservoir(
                sizes[l],
                input_dim if l == 0 else sizes[l - 1],
                topologies[l],
                rho=rhos[l],
                norm=norms[l],
                input_scaling=input_scaling if l == 0 else inter_layer_scaling,
                dist=dist,
                seed=derive_seed(seed, l),
                bias_scaling=bias_scaling,
            )
        )
    return DeepReservoir(tuple(layers), float(inter_layer_scaling))


def deep_step(dr: DeepReservoir, x_t, prev) -> list:
    if len(prev) != dr.n_layers:
        raise DimensionError(f"expected {dr.n_layers} previous states, got {len(prev)}")
    out = []
    drive = x_t
    for layer, h_prev in zip(dr.layers, prev):
        drive = step(layer, drive, h_prev)
        out.append(drive)
    return out


def _deep_states(dr, X, h0=None, linear=False):
    h0 = [None] * dr.n_layers if h0 is None else list(h0)
    if len(h0) != dr.n_layers:
        raise DimensionError(f"expected {dr.n_layers} initial states, got {len(h0)}")
    out = []
    drive = X
    for layer, start in zip(dr.layers, h0):
        drive = _states(layer, drive, start, linear)
        out.append(drive)
    return out


def deep_run(dr: DeepReservoir, series, washout=None, h0=None) -> list:
    """One ``StateTrace`` per layer, all sharing the same washout."""
    X = _as_series(series, dr.input_dim)
    T = X.shape[0]
    washout = default_washout(T) if washout is None else int(washout)
    if not 0 <= washout < T:
        raise ValueError(f"washout must lie in [0, {T}), got {washout}")
    return [StateTrace(S, washout) for S in _deep_states(dr, X, h0)]


def check_deep_sufficient(dr: DeepReservoir) -> ConditionCheck:
    """Contraction bound ``max_k sum_{i<=k} ||W_R^i|| prod_{i<j<=k} ||W^j||`` below 1.

    Evaluated with the running recurrence ``s_k = s_{k-1} ||W^k|| + ||W_R^k||``.
    """
    s = 0.0
    worst = 0.0
    for k, layer in enumerate(dr.layers):
        coupling = linalg.spectral_norm(layer.W) if k > 0 else 0.0
        s = s * coupling + linalg.spectral_norm(layer.W_R)
        worst = max(worst, s)
    return ConditionCheck(worst < 1.0, worst)


def check_deep_necessary(dr: DeepReservoir) -> ConditionCheck:
    value = max(linalg.spectral_radius(layer.W_R) for layer in dr.layers)
    return ConditionCheck(value < 1.0, value)


def check_deep_esp_empirical(dr: DeepReservoir, series, trials=10, tol=1e-6, seed=0) -> ESPResult:
    """ESP falsification test on the concatenated state of all layers."""
    if trials < 2:
        raise ValueError("need at least two trials")
    X = _as_series(series, dr.input_dim)
    rng = np.random.default_rng(seed)
    H = rng.uniform(-1.0, 1.0, (trials, sum(dr.sizes)))
    bounds = np.cumsum([0] + dr.sizes)
    U1 = dr.layers[0].drive(X)

    def step_batch(t, H):
        new = np.empty_like(H)
        below = None
        for l, layer in enumerate(dr.layers):
            h = H[:, bounds[l]:bounds[l + 1]]
            u = U1[t] if l == 0 else layer.drive(below)
            below = np.tanh(u + h @ layer.W_R)
            new[:, bounds[l]:bounds[l + 1]] = below
        return new

    trace = batch_distance_trace(step_batch, H, X.shape[0])
    return ESPResult(bool(trace[-1] < tol), trace)


def collect_features(traces, mode="all_layers") -> np.ndarray:
    """Readout design matrix from per-layer traces, washout rows dropped.

    ``all_layers`` concatenates the layers' states column-wise, layer 1
    first; ``last_layer`` keeps only the top layer.
    """
    if not traces:
        raise ValueError("no traces given")
    if mode not in READOUT_MODES:
        raise ValueError(f"unknown readout mode {mode!r}")
    lengths = {len(tr) for tr in traces}
    washouts = {tr.washout for tr in traces}
    if len(lengths) != 1 or len(washouts) != 1:
        raise DimensionError("traces disagree in length or washout")
    if mode == "last_layer":
        return traces[-1].usable.copy()
    return np.hstack([tr.usable for tr in traces])


def perturbation_duration(dr: DeepReservoir, series, t0, delta=1e-2, threshold=1e-6) -> np.ndarray:
    """Steps for which a one-off input perturbation stays visible, per layer.

    Runs the stack twice from zero state, once with ``x(t0) += delta``. For
    each layer the result is the last ``t`` with
    ``||h_pert(t) - h(t)|| > threshold``, minus ``t0`` (0 if never exceeded).
    """
    X = _as_series(series, dr.input_dim)
    if not 0 <= t0 < X.shape[0]:
        raise ValueError(f"t0 must lie in [0, {X.shape[0]})")
    Xp = X.copy()
    Xp[t0] += delta
    base = _deep_states(dr, X)
    pert = _deep_states(dr, Xp)
    out = np.zeros(dr.n_layers, dtype=int)
    for l, (a, b) in enumerate(zip(base, pert)):
        gap = np.linalg.norm(a[t0:] - b[t0:], axis=1)
        above = np.flatnonzero(gap > threshold)
        out[l] = int(above[-1]) if above.size else 0
    return out


class FrequencyProfile(NamedTuple):
    spectrum: np.ndarray
    degenerate: bool


MIN_PROFILE_LENGTH = 16


def frequency_profile(states) -> FrequencyProfile:
    """Unit-averaged FFT magnitude of centred state signals, normalized to sum 1.

    Constant signals centre to zero; the spectrum is then all zeros and the
    profile is flagged degenerate.
    """
    S = np.asarray(states, dtype=np.float64)
    if S.shape[0] < MIN_PROFILE_LENGTH:
        raise ValueError(f"need at least {MIN_PROFILE_LENGTH} time steps, got {S.shape[0]}")
    S = S - S.mean(axis=0)
    mag = np.abs(np.fft.rfft(S, axis=0)).mean(axis=1)
    total = mag.sum()
    if not total > 1e-300:
        return FrequencyProfile(np.zeros_like(mag), True)
    return FrequencyProfile(mag / total, False)


def layer_frequency_profile(traces) -> list:
    return [frequency_profile(tr.usable) for tr in traces]


def profile_distance(p, q):
    """Total-variation distance between two normalized spectra."""
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


@dataclass(frozen=True)
class LayerTemplate:
    n_units: int = 100
    rho: float = 0.9
    topology: Topology = Topology()
    inter_layer_scaling: float = 1.0
    input_scaling: float = 1.0
    dist: object = Uniform()


def auto_depth(series, template=LayerTemplate(), max_layers=10, epsilon=0.01, seed=0, washout=None) -> int:
    """Depth at which adding a layer stops changing the frequency profile.

    Grows the stack one layer at a time and returns ``l - 1`` for the first
    layer ``l`` whose profile lies within total-variation ``epsilon`` of the
    previous layer's, or ``max_layers`` if that never happens. Only forward
    dynamics are analysed; nothing is trained.
    """
    if max_layers < 1:
        raise ValueError("max_layers must be at least 1")
    dr = init_deep(
        [template.n_units] * max_layers,
        template.rho,
        template.inter_layer_scaling,
        input_dim=np.asarray(series).reshape(len(series), -1).shape[1],
        dist=template.dist,
        seed=seed,
        topology=template.topology,
        input_scaling=template.input_scaling,
    )
    X = _as_series(series, dr.input_dim)
    washout = default_washout(X.shape[0]) if washout is None else int(washout)
    drive = X
    previous = None
    for l, layer in enumerate(dr.layers):
        drive = _states(layer, drive)
        profile = frequency_profile(drive[washout:]).spectrum
        if previous is not None and profile_distance(profile, previous) < epsilon:
            return l
        previous = profile
    return max_layers
