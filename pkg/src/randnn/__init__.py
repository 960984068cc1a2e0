"""Randomized neural networks.

RVFL networks, echo state networks, deep echo state networks and
reservoirs over trees and graphs, with closed-form readouts, stability
checks and dynamical diagnostics.
"""

from ._backend import BACKEND, available_backends
from .deepesn import DeepReservoir, auto_depth, deep_run, init_deep
from .exceptions import (
    ConfigError,
    ContractionWarning,
    ConvergenceWarning,
    DimensionError,
    RandNNError,
    RankDeficiencyError,
    ScalingError,
    StructureError,
)
from .linalg import RidgeProblem, ridge_solve, spectral_norm, spectral_radius
from .reservoir import ReservoirLayer, Topology, init_reservoir, run
from .rvfl import expand, init_rvfl, train_readout
from .structures import GraphData, TreeData, graph_embed, pool, tree_embed

__version__ = "0.1.0"
