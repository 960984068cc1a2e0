"""End-to-end models assembled from an ``ExperimentConfig``.

A ``Model`` couples the untrained part of a network (random expansion,
autoencoder encoders or reservoir stack) with a trained ``Readout``. Every
kind maps its input to a design matrix whose first column is a constant
feature; the readout is linear on top of it.
"""

import dataclasses
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import rvfl
from .config import ExperimentConfig
from .deepesn import (
    DeepReservoir,
    _deep_states,
    check_deep_necessary,
    check_deep_sufficient,
    init_deep,
)
from .distributions import parse_distribution
from .exceptions import ConfigError, DimensionError
from .reservoir import _as_series, default_washout, parse_topology
from .structures import GraphData, TreeData, graph_embed, pool, tree_embed

SEQUENCE_KINDS = ("esn", "deepesn")
STRUCTURE_KINDS = ("tree", "graph")


@dataclass(frozen=True)
class Model:
    config: ExperimentConfig
    input_dim: int
    network: object
    readout: Optional[rvfl.Readout] = None

    @property
    def kind(self):
        return self.config.model

    @property
    def is_reservoir(self):
        return isinstance(self.network, DeepReservoir)

    def washout(self, T):
        if self.kind not in SEQUENCE_KINDS:
            return 0
        return default_washout(T) if self.config.washout is None else self.config.washout

    def features(self, data) -> np.ndarray:
        """Design matrix: one row per sample, time step or structure."""
        cfg = self.config
        if self.kind in STRUCTURE_KINDS:
            return np.vstack([self._structure_row(s) for s in data])
        X = _as_series(data, self.input_dim) if self.kind in SEQUENCE_KINDS else rvfl._check_input(data, self.input_dim)
        if self.kind == "rvfl":
            return rvfl.expand(self.network, X)
        if self.kind == "deep_rvfl":
            Z = self.network.transform(X)
        else:
            states = _deep_states(self.network, X)
            Z = np.hstack(states) if cfg.readout_mode == "all_layers" else states[-1]
        return np.hstack([np.ones((Z.shape[0], 1)), Z])

    def _structure_row(self, structure):
        cfg = self.config
        if self.kind == "tree":
            if not isinstance(structure, TreeData):
                raise ConfigError("tree models need tree records")
            emb = tree_embed(self.network, structure)
        else:
            if not isinstance(structure, GraphData):
                raise ConfigError("graph models need graph records")
            emb = graph_embed(
                self.network, structure, tol=cfg.graph_tol, max_iter=cfg.graph_max_iter,
                normalize=cfg.graph_normalize,
            )
        return np.concatenate([[1.0], pool(emb, cfg.pool, cfg.readout_mode)])

    def predict(self, data) -> np.ndarray:
        if self.readout is None:
            raise ConfigError("model has no trained readout")
        return self.readout.predict(self.features(data))

    def with_readout(self, readout):
        return dataclasses.replace(self, readout=readout)

    def stability(self) -> dict:
        """Deep sufficient/necessary condition values for reservoir kinds."""
        if not self.is_reservoir:
            return {}
        suff = check_deep_sufficient(self.network)
        nec = check_deep_necessary(self.network)
        return {
            "sufficient_value": suff.value,
            "sufficient_holds": suff.holds,
            "necessary_value": nec.value,
            "necessary_holds": nec.holds,
        }


def build_network(cfg: ExperimentConfig, input_dim, X=None):
    """Random part of the model, regenerated bitwise from ``cfg.seed``.

    ``deep_rvfl`` encoders are fitted to the inputs ``X`` and therefore
    cannot be regenerated from the seed alone.
    """
    dist = parse_distribution(cfg.dist)
    if cfg.model == "rvfl":
        return rvfl.init_rvfl(
            input_dim, cfg.hidden_dim, dist, cfg.seed, cfg.include_direct_links, cfg.include_bias_feature
        )
    if cfg.model == "deep_rvfl":
        if X is None:
            raise ConfigError("deep_rvfl encoders are fitted from data; supply training inputs")
        return rvfl.stack_autoencoders(
            X, list(cfg.layer_dims), cfg.ae_lam, dist, cfg.seed, activation=cfg.ae_activation
        )
    return init_deep(
        list(cfg.units),
        per_layer_rho=cfg.rho,
        inter_layer_scaling=cfg.inter_layer_scaling,
        input_dim=input_dim,
        dist=dist,
        seed=cfg.seed,
        topology=parse_topology(cfg.topology),
        input_scaling=cfg.input_scaling,
        per_layer_norm=cfg.norm,
        bias_scaling=cfg.bias_scaling,
    )


def init_model(cfg: ExperimentConfig, input_dim, X=None) -> Model:
    if input_dim <= 0:
        raise DimensionError("input dimension must be positive")
    return Model(cfg, int(input_dim), build_network(cfg, input_dim, X))


def network_arrays(model: Model) -> dict:
    """Named weight blocks of the untrained part."""
    net = model.network
    if model.kind == "rvfl":
        return {"W": net.W, "b": net.b}
    if model.kind == "deep_rvfl":
        return {f"encoder{l}": M for l, M in enumerate(net.weights)}
    out = {}
    for l, layer in enumerate(net.layers):
        out[f"layer{l}.W"] = layer.W
        out[f"layer{l}.W_R"] = layer.W_R
        if layer.bias is not None:
            out[f"layer{l}.bias"] = layer.bias
    return out


def network_from_arrays(cfg: ExperimentConfig, input_dim, arrays: dict):
    """Inverse of ``network_arrays``; metadata comes from a seed rebuild."""
    if cfg.model == "deep_rvfl":
        weights = tuple(arrays[f"encoder{l}"] for l in range(len(cfg.layer_dims)))
        return rvfl.AutoencoderStack(weights, cfg.ae_activation)
    template = build_network(cfg, input_dim)
    if cfg.model == "rvfl":
        return dataclasses.replace(template, W=arrays["W"], b=arrays["b"])
    layers = tuple(
        dataclasses.replace(
            layer,
            W=arrays[f"layer{l}.W"],
            W_R=arrays[f"layer{l}.W_R"],
            bias=arrays.get(f"layer{l}.bias"),
        )
        for l, layer in enumerate(template.layers)
    )
    return DeepReservoir(layers, template.inter_layer_scaling)
