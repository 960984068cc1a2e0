"""Deep reservoirs over trees and graphs.

Trees are embedded bottom-up, each node driven by its label (layer 1) or its
own state in the layer below (layer ``l > 1``), plus the sum of its
children's states through one shared recurrent matrix. Graph vertices take
the sum over their neighbours instead; the resulting fixed point is found
by synchronous (Jacobi) iteration from zero states.
"""

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import sparse

from . import linalg
from ._backend import kernels
from .deepesn import READOUT_MODES, DeepReservoir
from .exceptions import ContractionWarning, ConvergenceWarning, DimensionError, StructureError


@dataclass(frozen=True)
class TreeData:
    """Rooted ordered tree; ``children[n]`` lists node ``n``'s children in order."""

    labels: np.ndarray
    children: tuple
    target: Optional[np.ndarray] = None

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.float64)
        if labels.ndim == 1:
            labels = labels[:, None]
        if labels.ndim != 2 or labels.shape[0] == 0:
            raise StructureError(f"tree labels must be a nonempty (n x F) array, got {labels.shape}")
        if not np.all(np.isfinite(labels)):
            raise StructureError("tree labels contain non-finite values")
        n = labels.shape[0]
        children = tuple(tuple(int(c) for c in ch) for ch in self.children)
        if len(children) != n:
            raise StructureError(f"{n} labels but {len(children)} child lists")
        parent = [-1] * n
        for node, ch in enumerate(children):
            for c in ch:
                if not 0 <= c < n:
                    raise StructureError(f"node {node} references unknown child {c}")
                if parent[c] != -1:
                    raise StructureError(f"node {c} has more than one parent")
                parent[c] = node
        roots = [v for v in range(n) if parent[v] == -1]
        if len(roots) != 1:
            raise StructureError(f"tree must have exactly one root, found {len(roots)}")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "children", children)
        object.__setattr__(self, "_root", roots[0])
        order = self._postorder()
        if len(order) != n:
            raise StructureError("tree contains a cycle or unreachable nodes")
        object.__setattr__(self, "_order", order)

    def _postorder(self):
        order, stack, seen = [], [(self._root, False)], set()
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if node in seen:
                return []
            seen.add(node)
            stack.append((node, True))
            for c in reversed(self.children[node]):
                stack.append((c, False))
        return order

    @property
    def root(self):
        return self._root

    @property
    def n_nodes(self):
        return self.labels.shape[0]

    @property
    def max_arity(self):
        return max(len(ch) for ch in self.children)

    @property
    def order(self):
        """Node ids with every child before its parent (post-order)."""
        return list(self._order)


@dataclass(frozen=True)
class GraphData:
    """Graph with vertex features; for directed graphs ``N(v)`` holds the sources of edges into ``v``."""

    features: np.ndarray
    edges: np.ndarray
    directed: bool = False
    target: Optional[np.ndarray] = None

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        if feats.ndim == 1:
            feats = feats[:, None]
        if feats.ndim != 2 or feats.shape[0] == 0:
            raise StructureError(f"graph features must be a nonempty (n x F) array, got {feats.shape}")
        if not np.all(np.isfinite(feats)):
            raise StructureError("graph features contain non-finite values")
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        n = feats.shape[0]
        for u, v in edges:
            for vertex in (u, v):
                if not 0 <= vertex < n:
                    raise StructureError(f"edge ({u}, {v}) references unknown vertex {vertex}")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "edges", edges)

    @property
    def n_nodes(self):
        return self.features.shape[0]

    def adjacency(self):
        """Sparse matrix with ``A[v, u] = 1`` iff ``u`` is a neighbour of ``v``."""
        src, dst = self.edges[:, 0], self.edges[:, 1]
        if not self.directed:
            src, dst = np.r_[src, dst], np.r_[dst, src]
        A = sparse.coo_matrix((np.ones(src.size), (dst, src)), shape=(self.n_nodes,) * 2).tocsr()
        A.data[:] = 1.0  # collapse duplicate edges
        return A

    def neighbors(self):
        A = self.adjacency()
        return [list(A.indices[A.indptr[v]:A.indptr[v + 1]]) for v in range(self.n_nodes)]

    @property
    def max_degree(self):
        A = self.adjacency()
        return int(np.diff(A.indptr).max()) if self.n_nodes else 0


@dataclass(frozen=True)
class StructEmbedding:
    """Per-layer node states (original node order) plus convergence metadata."""

    states: tuple
    kind: str
    root: Optional[int] = None
    converged: tuple = ()
    iterations: tuple = ()
    residuals: tuple = ()
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def n_nodes(self):
        return self.states[0].shape[0]


def _check_layer_dims(dr, feature_dim):
    if dr.input_dim != feature_dim:
        raise DimensionError(f"node features have {feature_dim} columns, reservoir expects {dr.input_dim}")


def tree_embed(dr: DeepReservoir, tree: TreeData, linear=False) -> StructEmbedding:
    _check_layer_dims(dr, tree.labels.shape[1])
    order = np.asarray(tree.order, dtype=np.int64)
    position = np.empty_like(order)
    position[order] = np.arange(order.size)
    ptr = np.zeros(order.size + 1, dtype=np.int64)
    idx = []
    for k, node in enumerate(order):
        kids = [position[c] for c in tree.children[node]]
        idx.extend(kids)
        ptr[k + 1] = ptr[k] + len(kids)
    idx = np.asarray(idx, dtype=np.int64)
    drive_input = tree.labels[order]
    states = []
    for layer in dr.layers:
        S = kernels.tree_states(layer.drive(drive_input), layer.W_R, ptr, idx, linear)
        drive_input = S
        states.append(S[position])
    return StructEmbedding(tuple(states), "tree", root=tree.root)


def _graph_sweep(U, A, W_R, H, normalize, degree):
    S = A @ H
    if normalize:
        S = S / np.maximum(degree, 1)[:, None]
    return np.tanh(U + S @ W_R)


def fixed_point_residual(layer, graph: GraphData, drive_input, H, normalize=False):
    """``max_v ||F(H)(v) - H(v)||`` for the graph update map of one layer."""
    A = graph.adjacency()
    degree = np.diff(A.indptr)
    F = _graph_sweep(layer.drive(drive_input), A, layer.W_R, H, normalize, degree)
    return float(np.abs(F - H).max())


def graph_embed(
    dr: DeepReservoir,
    graph: GraphData,
    tol=1e-8,
    max_iter=500,
    normalize=False,
    init=None,
    seed=0,
) -> StructEmbedding:
    """Fixed-point vertex embeddings, layer by layer, by Jacobi sweeps.

    ``init`` is ``None`` (zeros), ``"random"`` (uniform in (-1,1), seeded) or a
    list of per-layer arrays. A sweep's residual is the largest absolute
    change of any state entry; iteration stops once it is below ``tol``.
    Warns when ``||W_R||_2 * k_max >= 1`` (``||W_R||_2`` with ``normalize``),
    and when ``max_iter`` is reached first.
    """
    _check_layer_dims(dr, graph.features.shape[1])
    A = graph.adjacency()
    degree = np.diff(A.indptr)
    k_max = int(degree.max()) if degree.size else 0
    rng = np.random.default_rng(seed)
    drive_input = graph.features
    states, converged, iterations, residuals = [], [], [], []
    for l, layer in enumerate(dr.layers):
        factor = linalg.spectral_norm(layer.W_R) * (1 if normalize else k_max)
        if factor >= 1.0:
            warnings.warn(
                f"layer {l + 1}: contraction factor {factor:.4g} >= 1; fixed point may not be unique",
                ContractionWarning,
                stacklevel=2,
            )
        U = layer.drive(drive_input)
        if init is None:
            H = np.zeros((graph.n_nodes, layer.n_units))
        elif isinstance(init, str) and init == "random":
            H = rng.uniform(-1.0, 1.0, (graph.n_nodes, layer.n_units))
        else:
            H = np.array(init[l], dtype=np.float64)
        residual = np.inf
        done = False
        it = 0
        for it in range(1, max_iter + 1):
            H_new = _graph_sweep(U, A, layer.W_R, H, normalize, degree)
            residual = float(np.abs(H_new - H).max()) if H.size else 0.0
            H = H_new
            if residual < tol:
                done = True
                break
        if not done:
            warnings.warn(
                f"layer {l + 1}: graph embedding not converged after {max_iter} sweeps "
                f"(residual {residual:.3g})",
                ConvergenceWarning,
                stacklevel=2,
            )
        states.append(H)
        converged.append(done)
        iterations.append(it)
        residuals.append(residual)
        drive_input = H
    return StructEmbedding(
        tuple(states), "graph", None, tuple(converged), tuple(iterations), tuple(residuals)
    )


POOL_MODES = ("root", "mean", "sum")


def pool(emb: StructEmbedding, mode="mean", layer_select="all_layers") -> np.ndarray:
    """Fixed-width structure feature: root state, or mean/sum over nodes.

    With ``all_layers`` the pooled layer vectors are concatenated, layer 1
    first.
    """
    if mode not in POOL_MODES:
        raise ValueError(f"unknown pooling mode {mode!r}")
    if layer_select not in READOUT_MODES:
        raise ValueError(f"unknown readout mode {layer_select!r}")
    if mode == "root" and emb.kind != "tree":
        raise ValueError("root pooling is only defined for trees")
    layers = emb.states if layer_select == "all_layers" else emb.states[-1:]
    if mode == "root":
        parts = [S[emb.root] for S in layers]
    elif mode == "mean":
        parts = [S.mean(axis=0) for S in layers]
    else:
        parts = [S.sum(axis=0) for S in layers]
    return np.concatenate(parts)
