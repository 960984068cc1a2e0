"""Experiment configuration: a flat JSON object mirroring ``ExperimentConfig``."""

import dataclasses
import json
from dataclasses import dataclass, fields

from .distributions import parse_distribution
from .exceptions import ConfigError
from .reservoir import parse_topology

MODEL_KINDS = ("rvfl", "deep_rvfl", "esn", "deepesn", "tree", "graph")
RECURRENT_KINDS = ("esn", "deepesn", "tree", "graph")
LOSSES = ("squared", "logistic", "l1")


@dataclass(frozen=True)
class ExperimentConfig:
    model: str = "esn"
    input_dim: int = None
    # architecture
    hidden_dim: int = 100
    layer_dims: tuple = (50, 50)
    units: tuple = (100,)
    topology: str = "dense"
    rho: float = None
    norm: float = None
    input_scaling: float = 1.0
    inter_layer_scaling: float = 1.0
    bias_scaling: float = 0.0
    dist: str = "uniform(-1,1)"
    include_direct_links: bool = True
    include_bias_feature: bool = True
    ae_lam: float = 1e-3
    ae_activation: str = "tanh"
    # readout
    lambdas: tuple = (1e-6, 1e-4, 1e-2, 1.0)
    loss: str = "squared"
    readout_mode: str = "all_layers"
    pool: str = "mean"
    # task
    washout: int = None
    val_fraction: float = 0.2
    test_fraction: float = 0.2
    mc_K: int = 40
    mc_T: int = None
    esp_T: int = 500
    esp_trials: int = 10
    graph_tol: float = 1e-8
    graph_max_iter: int = 500
    graph_normalize: bool = False
    # run control
    seed: int = 0
    materialize_weights: bool = True
    fatal_unstable: bool = False
    workers: int = 1

    def __post_init__(self):
        for name in ("layer_dims", "units", "lambdas"):
            value = getattr(self, name)
            if not isinstance(value, (list, tuple)):
                value = (value,)
            object.__setattr__(self, name, tuple(value))
        if self.rho is None and self.norm is None:
            object.__setattr__(self, "rho", 0.9)
        validate(self)

    @property
    def n_layers(self):
        return len(self.units)

    def to_dict(self):
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        for name in ("layer_dims", "units", "lambdas"):
            out[name] = list(out[name])
        return out

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    def replace(self, **changes):
        unknown = set(changes) - field_names()
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        # rho and norm are alternatives; setting one clears the other
        if changes.get("norm") is not None and "rho" not in changes:
            changes["rho"] = None
        if changes.get("rho") is not None and "norm" not in changes:
            changes["norm"] = None
        return dataclasses.replace(self, **changes)


def field_names():
    return {f.name for f in fields(ExperimentConfig)}


def _positive_int(cfg, name, allow_none=False):
    value = getattr(cfg, name)
    if value is None and allow_none:
        return
    if isinstance(value, bool) or not isinstance(value, int) or value <= 0:
        raise ConfigError(f"{name} must be a positive integer, got {value!r}")


def validate(cfg: ExperimentConfig):
    if cfg.model not in MODEL_KINDS:
        raise ConfigError(f"model must be one of {MODEL_KINDS}, got {cfg.model!r}")
    if cfg.loss not in LOSSES:
        raise ConfigError(f"loss must be one of {LOSSES}, got {cfg.loss!r}")
    if cfg.readout_mode not in ("all_layers", "last_layer"):
        raise ConfigError(f"unknown readout_mode {cfg.readout_mode!r}")
    if cfg.pool not in ("root", "mean", "sum"):
        raise ConfigError(f"unknown pool {cfg.pool!r}")
    if cfg.pool == "root" and cfg.model == "graph":
        raise ConfigError("root pooling is only defined for trees")
    for name in ("hidden_dim", "mc_K", "esp_T", "graph_max_iter", "workers"):
        _positive_int(cfg, name)
    _positive_int(cfg, "mc_T", allow_none=True)
    _positive_int(cfg, "input_dim", allow_none=True)
    if cfg.washout is not None and (not isinstance(cfg.washout, int) or cfg.washout < 0):
        raise ConfigError(f"washout must be a nonnegative integer, got {cfg.washout!r}")
    if cfg.esp_trials < 2:
        raise ConfigError("esp_trials must be at least 2")
    for name in ("layer_dims", "units"):
        values = getattr(cfg, name)
        if not values or any(isinstance(v, bool) or not isinstance(v, int) or v <= 0 for v in values):
            raise ConfigError(f"{name} must be a nonempty list of positive integers, got {list(values)}")
    if cfg.model == "esn" and len(cfg.units) != 1:
        raise ConfigError("esn takes exactly one entry in units; use model 'deepesn' for stacks")
    if not cfg.lambdas:
        raise ConfigError("lambdas must be nonempty")
    for lam in cfg.lambdas:
        if not isinstance(lam, (int, float)) or lam < 0:
            raise ConfigError(f"lambdas must be nonnegative numbers, got {lam!r}")
        if cfg.loss == "l1" and lam == 0:
            raise ConfigError("l1 readout needs lambdas > 0")
    if cfg.rho is not None and cfg.norm is not None:
        raise ConfigError("set either rho or norm, not both")
    target = cfg.norm if cfg.norm is not None else cfg.rho
    if not target > 0:
        raise ConfigError("a positive rho or norm is required")
    for name in ("val_fraction", "test_fraction"):
        value = getattr(cfg, name)
        if not 0.0 <= value < 1.0:
            raise ConfigError(f"{name} must lie in [0, 1), got {value}")
    if cfg.val_fraction + cfg.test_fraction >= 1.0:
        raise ConfigError("val_fraction + test_fraction must leave training data")
    if len(cfg.lambdas) > 1 and cfg.val_fraction == 0.0:
        raise ConfigError("selecting among several lambdas needs val_fraction > 0")
    if cfg.ae_activation not in ("tanh", "sigmoid", "identity"):
        raise ConfigError(f"unknown ae_activation {cfg.ae_activation!r}")
    try:
        parse_topology(cfg.topology)
        parse_distribution(cfg.dist)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def config_from_dict(data) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - field_names()
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    try:
        return ExperimentConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return config_from_dict(data)
