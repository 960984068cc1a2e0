"""Experiment pipelines behind the command-line verbs.

Each function takes an ``ExperimentConfig`` (or a ``Model``) and in-memory
data and returns plain dictionaries or row lists, so the same code paths
serve the CLI, sweeps and tests.
"""

import itertools
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import diagnostics
from .config import ExperimentConfig, field_names
from .deepesn import (
    _deep_states,
    check_deep_esp_empirical,
    frequency_profile,
    perturbation_duration,
    profile_distance,
)
from .exceptions import ConfigError, DataFormatError
from .models import SEQUENCE_KINDS, STRUCTURE_KINDS, Model, init_model
from .reservoir import StateTrace, _as_series, default_washout
from .rvfl import train_readout
from .structures import graph_embed, pool, tree_embed


@dataclass(frozen=True)
class Dataset:
    """Either a series/sample matrix ``X`` (with optional ``Y``) or structures."""

    X: Optional[np.ndarray] = None
    Y: Optional[np.ndarray] = None
    structures: Optional[list] = None

    @property
    def input_dim(self):
        if self.structures is not None:
            s = self.structures[0]
            return (s.labels if hasattr(s, "labels") else s.features).shape[1]
        return self.X.shape[1]

    def inputs(self):
        return self.structures if self.structures is not None else self.X

    def targets(self):
        if self.structures is not None:
            if any(s.target is None for s in self.structures):
                return None
            return np.vstack([np.atleast_1d(s.target) for s in self.structures])
        if self.Y is None:
            return None
        return self.Y if self.Y.ndim == 2 else self.Y[:, None]


def _check_data_kind(cfg, data: Dataset):
    if cfg.model in STRUCTURE_KINDS and data.structures is None:
        raise DataFormatError(f"model {cfg.model!r} needs a structure (JSONL) dataset")
    if cfg.model not in STRUCTURE_KINDS and data.X is None:
        raise DataFormatError(f"model {cfg.model!r} needs a delimited time-series dataset")


def split_indices(n, val_fraction, test_fraction):
    """Contiguous train/validation/test index ranges in data order."""
    n_test = int(round(test_fraction * n))
    n_val = int(round(val_fraction * n))
    n_train = n - n_val - n_test
    if n_train <= 0:
        raise DataFormatError(f"{n} usable rows leave no training data")
    return (
        np.arange(0, n_train),
        np.arange(n_train, n_train + n_val),
        np.arange(n_train + n_val, n),
    )


def score(loss, Y, P):
    """Error used for lambda selection: MSE, or misclassification rate."""
    if loss == "logistic":
        return float(np.mean((P >= 0.5) != (Y >= 0.5)))
    return float(np.mean((P - Y) ** 2))


def _split_metrics(loss, Y, P, name):
    if Y.shape[0] == 0:
        return {}
    if loss == "logistic":
        return {f"{name}_accuracy": 1.0 - score(loss, Y, P)}
    out = {f"{name}_mse": score(loss, Y, P)}
    ss = np.sum((Y - Y.mean(axis=0)) ** 2, axis=0)
    if np.all(ss > 0):
        out[f"{name}_r2"] = float(np.mean(1.0 - np.sum((Y - P) ** 2, axis=0) / ss))
    return out


def _usable(model, data):
    """Design matrix and targets with the washout rows removed."""
    Y = data.targets()
    H = model.features(data.inputs())
    w = model.washout(H.shape[0])
    if w >= H.shape[0]:
        raise DataFormatError(f"washout {w} leaves no usable rows out of {H.shape[0]}")
    return H[w:], (None if Y is None else Y[w:])


def train(cfg: ExperimentConfig, data: Dataset):
    """Fit the readout, selecting lambda on the validation split.

    Returns ``(model, metrics)``. With one lambda there is no selection.
    The readout is fitted on the training split only, so validation and
    test errors are both held out.
    """
    _check_data_kind(cfg, data)
    Y_all = data.targets()
    if Y_all is None:
        raise DataFormatError("training needs target columns (y0..) or record targets")
    n_rows = len(data.inputs())
    washout = 0
    if cfg.model in SEQUENCE_KINDS:
        washout = default_washout(n_rows) if cfg.washout is None else cfg.washout
    tr, va, te = split_indices(n_rows - washout, cfg.val_fraction, cfg.test_fraction)
    fit_inputs = data.X[tr] if cfg.model == "deep_rvfl" else None
    model = init_model(cfg, data.input_dim, fit_inputs)
    H, Y = _usable(model, data)
    scores = []
    readouts = []
    for lam in cfg.lambdas:
        readout = train_readout(H[tr], Y[tr], lam, cfg.loss)
        readouts.append(readout)
        if len(cfg.lambdas) > 1:
            scores.append(score(cfg.loss, Y[va], readout.predict(H[va])))
    best = int(np.argmin(scores)) if scores else 0
    model = model.with_readout(readouts[best])
    P = model.readout.predict(H)
    metrics = {"lambda": float(cfg.lambdas[best]), "n_train": int(tr.size), "n_val": int(va.size), "n_test": int(te.size)}
    for name, idx in (("train", tr), ("val", va), ("test", te)):
        metrics.update(_split_metrics(cfg.loss, Y[idx], P[idx], name))
    if scores:
        metrics["val_scores"] = scores
    metrics.update(model.stability())
    return model, metrics


def evaluate(model: Model, data: Dataset) -> dict:
    _check_data_kind(model.config, data)
    if data.targets() is None:
        raise DataFormatError("evaluation needs target columns (y0..) or record targets")
    H, Y = _usable(model, data)
    if model.readout is None:
        raise ConfigError("model has no trained readout; run train first")
    metrics = _split_metrics(model.config.loss, Y, model.readout.predict(H), "eval")
    metrics["n_eval"] = int(Y.shape[0])
    return metrics


def probe_series(cfg: ExperimentConfig, input_dim, T=None):
    """Seeded i.i.d. uniform(-0.8, 0.8) input used when no data is supplied."""
    T = cfg.esp_T if T is None else T
    return np.random.default_rng(cfg.seed).uniform(-0.8, 0.8, (T, input_dim))


def _require_reservoir(model):
    if model.kind not in SEQUENCE_KINDS + STRUCTURE_KINDS:
        raise ConfigError(f"model {model.kind!r} has no recurrent reservoir")


def esp_check(model: Model, series=None) -> dict:
    """Shallow/deep stability conditions plus the empirical ESP test."""
    _require_reservoir(model)
    cfg = model.config
    X = probe_series(cfg, model.input_dim) if series is None else _as_series(series, model.input_dim)
    result = check_deep_esp_empirical(model.network, X, trials=cfg.esp_trials, seed=cfg.seed)
    out = dict(model.stability())
    out["esp_converged"] = result.converged
    out["esp_final_distance"] = float(result.distance_trace[-1])
    out["stable"] = bool(out["necessary_holds"] and result.converged)
    return out


def memory_capacity(model: Model, activation="tanh"):
    _require_reservoir(model)
    cfg = model.config
    K = cfg.mc_K
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        report = diagnostics.memory_capacity(
            model.network, K=K, T=cfg.mc_T, seed=cfg.seed, activation=activation, washout=cfg.washout
        )
    return report, [str(w.message) for w in caught]


def diagnose(model: Model, series=None) -> dict:
    """Stability, ESP, memory capacity and per-layer dynamics on one series.

    Returns ``{"summary": {...}, "layers": [row, ...], "notes": [...]}``.
    """
    _require_reservoir(model)
    cfg = model.config
    summary = esp_check(model, series)
    notes = []
    if model.input_dim == 1:
        report, msgs = memory_capacity(model)
        summary["memory_capacity"] = report.total
        notes += msgs
    else:
        notes.append("memory capacity skipped: needs a scalar-input model")
    if model.kind in STRUCTURE_KINDS:
        return {"summary": summary, "layers": [], "notes": notes + ["per-layer dynamics need a sequence model"]}
    X = probe_series(cfg, model.input_dim) if series is None else _as_series(series, model.input_dim)
    T = X.shape[0]
    washout = model.washout(T)
    states = _deep_states(model.network, X)
    durations = perturbation_duration(model.network, X, t0=washout)
    rows = []
    previous = None
    drive = X
    for l, (layer, S) in enumerate(zip(model.network.layers, states)):
        usable = S[washout:]
        row = {"layer": l + 1, "units": layer.n_units}
        try:
            row["entropy"] = diagnostics.state_entropy(StateTrace(S, washout))
        except ValueError as exc:
            row["entropy"] = float("nan")
            notes.append(f"layer {l + 1} entropy: {exc}")
        lyap = diagnostics.local_lyapunov_spectrum(layer, drive, m=1, window=T - washout)
        row["lyapunov_max"] = lyap.max_exponent
        try:
            profile = frequency_profile(usable)
            row["profile_peak_bin"] = int(np.argmax(profile.spectrum))
            row["profile_tv_to_previous"] = (
                float("nan") if previous is None else profile_distance(profile.spectrum, previous)
            )
            previous = profile.spectrum
        except ValueError as exc:
            notes.append(f"layer {l + 1} frequency profile: {exc}")
        row["perturbation_duration"] = int(durations[l])
        rows.append(row)
        drive = S
    return {"summary": summary, "layers": rows, "notes": notes}


def embed(model: Model, structures) -> np.ndarray:
    """Pooled structure features (no readout), one row per structure."""
    cfg = model.config
    if model.kind not in STRUCTURE_KINDS:
        raise ConfigError("embed needs a tree or graph model")
    rows = []
    for s in structures:
        if model.kind == "tree":
            emb = tree_embed(model.network, s)
        else:
            emb = graph_embed(
                model.network, s, tol=cfg.graph_tol, max_iter=cfg.graph_max_iter, normalize=cfg.graph_normalize
            )
        rows.append(pool(emb, cfg.pool, cfg.readout_mode))
    return np.vstack(rows)


def sweep_cells(cfg: ExperimentConfig, spec: dict):
    """Cartesian product of the spec's value lists, in spec key order.

    Fields not in the spec (including ``seed``) keep their base values.
    Returns ``(change, config)`` pairs; a cell whose config is invalid
    carries the ``ConfigError`` in place of a config.
    """
    if not isinstance(spec, dict) or not spec:
        raise ConfigError("sweep spec must be a nonempty object of field -> list of values")
    keys = list(spec)
    unknown = set(keys) - field_names()
    if unknown:
        raise ConfigError(f"unknown sweep keys: {', '.join(sorted(unknown))}")
    values = []
    for key in keys:
        v = spec[key]
        if not isinstance(v, list) or not v:
            raise ConfigError(f"sweep values for {key!r} must be a nonempty list")
        values.append(v)
    cells = []
    for combo in itertools.product(*values):
        change = dict(zip(keys, combo))
        try:
            cells.append((change, cfg.replace(**change)))
        except ConfigError as exc:
            cells.append((change, exc))
    return cells


def _run_cell(args):
    change, cfg, data = args
    row = dict(change)
    try:
        if isinstance(cfg, Exception):
            raise cfg
        _, metrics = train(cfg, data)
        row.update({k: v for k, v in metrics.items() if k != "val_scores"})
        row["error"] = ""
    except Exception as exc:  # reported per row; other cells still run
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def sweep(cfg: ExperimentConfig, spec: dict, data: Dataset, workers=1) -> list:
    """One row per cell with its metrics and stability flags, in cell order."""
    cells = [(change, c, data) for change, c in sweep_cells(cfg, spec)]
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool_:
            return list(pool_.map(_run_cell, cells))
    return [_run_cell(c) for c in cells]
