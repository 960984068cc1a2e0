import warnings

import numpy as np
import pytest

from randnn import deepesn as D
from randnn import reservoir as R
from randnn import structures as S
from randnn.exceptions import ContractionWarning, ConvergenceWarning, DimensionError, StructureError


def unit_stack(*pairs):
    return D.DeepReservoir(tuple(R.ReservoirLayer(np.array([[w]]), np.array([[wr]])) for w, wr in pairs))


def path_tree(labels):
    """Unary tree whose leaf holds labels[0] and root holds labels[-1]."""
    n = len(labels)
    return S.TreeData(labels, [[k - 1] if k else [] for k in range(n)])


def brute_force_graph(layer, graph, sweeps):
    """Per-vertex loops over explicit neighbour lists, synchronous updates."""
    nbrs = graph.neighbors()
    U = graph.features @ layer.W
    H = np.zeros((graph.n_nodes, layer.n_units))
    for _ in range(sweeps):
        new = np.empty_like(H)
        for v in range(graph.n_nodes):
            s = np.zeros(layer.n_units)
            for u in nbrs[v]:
                s += H[u]
            new[v] = np.tanh(U[v] + s @ layer.W_R)
        H = new
    return H


class TestTreeData:
    def test_properties(self):
        t = S.TreeData(np.zeros((4, 2)), [[1, 2], [3], [], []])
        assert t.root == 0 and t.n_nodes == 4 and t.max_arity == 2
        order = t.order
        assert order.index(3) < order.index(1) < order.index(0)

    @pytest.mark.parametrize(
        "children",
        [
            [[1], [0]],
            [[1], [], [1]],
            [[5], []],
            [[], []],
        ],
    )
    def test_invalid(self, children):
        with pytest.raises(StructureError):
            S.TreeData(np.zeros((len(children), 1)), children)

    def test_non_finite_label(self):
        with pytest.raises(StructureError):
            S.TreeData([[np.nan]], [[]])


class TestTreeEmbed:
    def test_leaf(self):
        dr = unit_stack((0.5, 0.5))
        emb = S.tree_embed(dr, S.TreeData([[2.0]], [[]]))
        np.testing.assert_allclose(emb.states[0], [[np.tanh(1.0)]])

    def test_two_node_hand_evaluation(self):
        dr = unit_stack((0.5, 0.5))
        emb = S.tree_embed(dr, S.TreeData([[1.0], [1.0]], [[1], []]))
        child = np.tanh(0.5)
        np.testing.assert_allclose(emb.states[0][:, 0], [np.tanh(0.5 + 0.5 * child), child])

    def test_child_sum_shared_weights(self, rng):
        dr = D.init_deep([6], input_dim=2, seed=1)
        tree = S.TreeData(rng.standard_normal((3, 2)), [[1, 2], [], []])
        states = S.tree_embed(dr, tree).states[0]
        layer = dr.layers[0]
        expected_root = np.tanh(tree.labels[0] @ layer.W + (states[1] + states[2]) @ layer.W_R)
        np.testing.assert_allclose(states[0], expected_root, rtol=1e-13)

    def test_child_permutation_invariance(self, rng):
        dr = D.init_deep([8, 8], input_dim=1, seed=2)
        labels = rng.standard_normal((4, 1))
        a = S.tree_embed(dr, S.TreeData(labels, [[1, 2, 3], [], [], []]))
        b = S.tree_embed(dr, S.TreeData(labels, [[3, 1, 2], [], [], []]))
        for sa, sb in zip(a.states, b.states):
            np.testing.assert_allclose(sa, sb, rtol=1e-14, atol=1e-15)

    def test_path_equals_sequence_bitwise(self, rng):
        for seed in range(5):
            labels = rng.standard_normal((30, 2))
            dr = D.init_deep([7, 5], input_dim=2, seed=seed)
            emb = S.tree_embed(dr, path_tree(labels))
            for tree_states, trace in zip(emb.states, D.deep_run(dr, labels, washout=0)):
                assert np.array_equal(tree_states, trace.states)

    def test_node_order_is_preserved(self, rng):
        dr = D.init_deep([4], input_dim=1, seed=0)
        labels = rng.standard_normal((3, 1))
        emb = S.tree_embed(dr, S.TreeData(labels, [[], [0, 2], []]))
        leaf = np.tanh(labels[0] @ dr.layers[0].W)
        np.testing.assert_allclose(emb.states[0][0], leaf)
        assert emb.root == 1

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            S.tree_embed(D.init_deep([3], input_dim=2), S.TreeData([[1.0]], [[]]))


class TestGraphData:
    def test_undirected_symmetric(self):
        g = S.GraphData([[1.0], [2.0]], [[0, 1]])
        assert g.neighbors() == [[1], [0]]
        assert g.max_degree == 1

    def test_directed_in_neighbours(self):
        g = S.GraphData(np.zeros((3, 1)), [[0, 1], [1, 2]], directed=True)
        assert g.neighbors() == [[], [0], [1]]

    def test_duplicate_edges_collapse(self):
        g = S.GraphData(np.zeros((2, 1)), [[0, 1], [0, 1], [1, 0]])
        assert g.adjacency().toarray().tolist() == [[0, 1], [1, 0]]

    def test_unknown_vertex_named(self):
        with pytest.raises(StructureError, match="vertex 7"):
            S.GraphData(np.zeros((3, 1)), [[0, 7]])


class TestGraphEmbed:
    def test_isolated_vertex(self, rng):
        dr = D.init_deep([5], input_dim=2, per_layer_norm=0.5, seed=0)
        g = S.GraphData(rng.standard_normal((1, 2)), np.zeros((0, 2)))
        emb = S.graph_embed(dr, g)
        np.testing.assert_allclose(emb.states[0], np.tanh(g.features @ dr.layers[0].W))
        assert emb.converged == (True,)

    def test_huge_tol_single_sweep(self, rng):
        dr = D.init_deep([4], input_dim=1, per_layer_norm=0.2, seed=0)
        g = S.GraphData(rng.standard_normal((3, 1)), [[0, 1], [1, 2]])
        emb = S.graph_embed(dr, g, tol=1e9)
        assert emb.iterations == (1,)
        np.testing.assert_allclose(emb.states[0], np.tanh(g.features @ dr.layers[0].W))

    def test_matches_brute_force(self, rng):
        dr = D.init_deep([6], input_dim=2, per_layer_norm=0.05, seed=3)
        g = S.GraphData(rng.standard_normal((2, 2)), [[0, 1]])
        emb = S.graph_embed(dr, g, tol=1e-10)
        oracle = brute_force_graph(dr.layers[0], g, 200)
        np.testing.assert_allclose(emb.states[0], oracle, atol=1e-11)
        assert S.fixed_point_residual(dr.layers[0], g, g.features, emb.states[0]) < 1e-10

    def test_dag_exact_fixed_point(self, rng):
        # longest path 0 -> 1 -> 2 -> 3 has 3 edges
        g = S.GraphData(rng.standard_normal((5, 1)), [[0, 1], [1, 2], [2, 3], [0, 4], [4, 3]], directed=True)
        dr = D.init_deep([5, 5], input_dim=1, seed=1)
        with warnings.catch_warnings():
            # tol=0 never triggers the stopping rule; exactness is checked below
            warnings.simplefilter("ignore")
            emb = S.graph_embed(dr, g, tol=0.0, max_iter=4)
        drive = g.features
        for layer, H in zip(dr.layers, emb.states):
            assert S.fixed_point_residual(layer, g, drive, H) == 0.0
            drive = H

    def test_permutation_equivariance(self, rng):
        dr = D.init_deep([6], input_dim=2, per_layer_norm=0.3, seed=2)
        feats = rng.standard_normal((4, 2))
        edges = np.array([[0, 1], [1, 2], [2, 3]])
        perm = np.array([2, 0, 3, 1])
        inv = np.argsort(perm)
        a = S.graph_embed(dr, S.GraphData(feats, edges), tol=1e-12).states[0]
        b = S.graph_embed(dr, S.GraphData(feats[perm], inv[edges]), tol=1e-12).states[0]
        np.testing.assert_allclose(a[perm], b, atol=1e-11)

    def test_unique_fixed_point(self, rng):
        dr = D.init_deep([6, 6], input_dim=2, per_layer_norm=0.3, seed=2)
        g = S.GraphData(rng.standard_normal((5, 2)), [[0, 1], [1, 2], [2, 3], [3, 4], [4, 0]])
        tol = 1e-9
        a = S.graph_embed(dr, g, tol=tol)
        b = S.graph_embed(dr, g, tol=tol, init="random", seed=7)
        for sa, sb in zip(a.states, b.states):
            assert np.abs(sa - sb).max() <= 10 * tol

    def test_warnings(self, rng):
        dr = D.init_deep([4], input_dim=1, per_layer_norm=0.9, seed=0)
        g = S.GraphData(rng.standard_normal((3, 1)), [[0, 1], [1, 2], [2, 0]])
        # factor 0.9 * 2 >= 1: this graph's iteration does not settle either
        with pytest.warns(ContractionWarning), pytest.warns(ConvergenceWarning):
            S.graph_embed(dr, g, max_iter=500)
        with pytest.warns(ConvergenceWarning):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ContractionWarning)
                emb = S.graph_embed(dr, g, tol=1e-15, max_iter=2)
        assert emb.converged == (False,) and emb.iterations == (2,)

    def test_degree_normalization(self, rng):
        dr = D.init_deep([4], input_dim=1, per_layer_norm=0.9, seed=0)
        g = S.GraphData(rng.standard_normal((3, 1)), [[0, 1], [1, 2], [2, 0]])
        with warnings.catch_warnings():
            warnings.simplefilter("error", ContractionWarning)
            emb = S.graph_embed(dr, g, normalize=True)
        assert emb.converged == (True,)


class TestPool:
    def _emb(self, states, kind="tree"):
        return S.StructEmbedding(tuple(states), kind, root=0)

    def test_single_node(self):
        emb = self._emb([np.array([[1.0, 2.0]])])
        for mode in ("mean", "sum", "root"):
            np.testing.assert_array_equal(S.pool(emb, mode), [1.0, 2.0])

    def test_identical_nodes_mean(self):
        emb = self._emb([np.array([[1.0, 2.0], [1.0, 2.0]])])
        np.testing.assert_array_equal(S.pool(emb, "mean"), [1.0, 2.0])
        np.testing.assert_array_equal(S.pool(emb, "sum"), [2.0, 4.0])

    def test_layer_select(self):
        emb = self._emb([np.ones((2, 2)), 2 * np.ones((2, 3))])
        assert S.pool(emb, "mean").shape == (5,)
        np.testing.assert_array_equal(S.pool(emb, "mean", "last_layer"), [2.0, 2.0, 2.0])

    def test_root_on_graph(self):
        with pytest.raises(ValueError):
            S.pool(self._emb([np.ones((2, 2))], "graph"), "root")
