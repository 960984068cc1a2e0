import numpy as np
import pytest

from randnn import linalg
from randnn import reservoir as res
from randnn.exceptions import DimensionError, ScalingError


class TestTopology:
    @pytest.mark.parametrize(
        "text, expected",
        [
            ("dense", res.Topology("dense")),
            ("sparse(0.2)", res.Topology("sparse", density=0.2)),
            ("ring", res.Topology("ring")),
            ("multi_ring(3)", res.Topology("multi_ring", cycles=3)),
            ("chain", res.Topology("chain")),
        ],
    )
    def test_parse(self, text, expected):
        assert res.parse_topology(text) == expected

    @pytest.mark.parametrize("text", ["star", "ring(2)", "sparse(2)", "multi_ring(0)"])
    def test_parse_errors(self, text):
        with pytest.raises(ValueError):
            res.parse_topology(text)


class TestInit:
    def test_rho_scaling_matches_lapack(self):
        layer = res.init_reservoir(40, 2, rho=0.7, seed=3)
        assert np.abs(np.linalg.eigvals(layer.W_R)).max() == pytest.approx(0.7, rel=1e-10)
        assert layer.scaling_mode == "rho" and layer.W.shape == (2, 40)

    def test_norm_scaling_matches_svd(self):
        layer = res.init_reservoir(30, 1, norm=0.5, seed=4)
        assert np.linalg.svd(layer.W_R, compute_uv=False)[0] == pytest.approx(0.5, rel=1e-10)

    def test_default_is_rho_point_nine(self):
        assert linalg.spectral_radius(res.init_reservoir(20, 1, seed=0).W_R) == pytest.approx(0.9)

    def test_ring_structure(self):
        W_R = res.init_reservoir(5, 1, "ring", rho=0.8).W_R
        expected = np.zeros((5, 5))
        for i in range(5):
            expected[(i + 1) % 5, i] = 0.8
        np.testing.assert_allclose(W_R, expected)

    def test_ring_signal_flow(self):
        # lower-shift pattern: a pulse in unit 1 reaches unit 0 one step later
        layer = res.init_reservoir(4, 1, "ring", rho=0.5)
        h = np.array([0.0, 1.0, 0.0, 0.0]) @ layer.W_R
        np.testing.assert_allclose(h, [0.5, 0.0, 0.0, 0.0])

    def test_ring_scaled_orthogonal(self):
        W_R = res.init_reservoir(9, 1, "ring", rho=0.9).W_R
        np.testing.assert_allclose(W_R.T @ W_R, 0.81 * np.eye(9), atol=1e-15)
        assert linalg.spectral_norm(W_R) == pytest.approx(0.9)

    def test_chain_is_strictly_lower_shift(self):
        W_R = res.init_reservoir(5, 1, "chain", norm=1.0).W_R
        np.testing.assert_array_equal(W_R, np.eye(5, k=-1))

    def test_multi_ring_cycles(self):
        W_R = res.init_reservoir(7, 1, "multi_ring(2)", rho=0.9).W_R
        assert np.count_nonzero(W_R) == 7
        np.testing.assert_allclose(np.abs(np.linalg.eigvals(W_R)), 0.9, rtol=1e-12)
        assert not W_R[:4, 4:].any() and not W_R[4:, :4].any()

    def test_chain_needs_norm(self):
        with pytest.raises(ScalingError, match="norm"):
            res.init_reservoir(6, 1, "chain", rho=0.9)
        W_R = res.init_reservoir(6, 1, "chain", norm=0.6).W_R
        assert np.count_nonzero(W_R) == 5
        assert linalg.spectral_radius(W_R) == 0.0
        assert np.linalg.svd(W_R, compute_uv=False)[0] == pytest.approx(0.6)

    def test_sparse_density(self):
        W_R = res.init_reservoir(200, 1, "sparse(0.05)", seed=1).W_R
        assert 0.03 < np.count_nonzero(W_R) / W_R.size < 0.07

    def test_random_ring_signs(self):
        W_R = res.init_reservoir(50, 1, res.Topology("ring", ring_signs="random"), rho=0.9, seed=2).W_R
        values = W_R[W_R != 0]
        assert set(np.round(values, 12)) == {-0.9, 0.9}

    def test_input_scaling_and_bias(self):
        layer = res.init_reservoir(10, 3, input_scaling=0.1, bias_scaling=0.2, seed=0)
        assert np.abs(layer.W).max() <= 0.1 and np.abs(layer.bias).max() <= 0.2

    def test_invalid_args(self):
        with pytest.raises(ValueError):
            res.init_reservoir(10, 1, rho=0.9, norm=0.5)
        with pytest.raises(ValueError):
            res.init_reservoir(10, 1, rho=-1.0)
        with pytest.raises(ValueError):
            res.init_reservoir(3, 1, "multi_ring(4)")

    def test_seed_determinism(self):
        a = res.init_reservoir(15, 2, seed=9)
        b = res.init_reservoir(15, 2, seed=9)
        assert np.array_equal(a.W_R, b.W_R) and np.array_equal(a.W, b.W)


class TestRun:
    def test_matches_step_loop(self, rng):
        layer = res.init_reservoir(12, 2, seed=1, bias_scaling=0.3)
        X = rng.standard_normal((30, 2))
        h = np.zeros(12)
        expected = []
        for x in X:
            h = res.step(layer, x, h)
            expected.append(h)
        np.testing.assert_allclose(res.run(layer, X).states, expected, rtol=1e-13, atol=1e-15)

    def test_hand_evaluation(self):
        layer = res.ReservoirLayer(np.array([[0.5]]), np.array([[0.5]]))
        states = res.run(layer, [1.0, 1.0], washout=0).states[:, 0]
        np.testing.assert_allclose(states, [np.tanh(0.5), np.tanh(0.5 + 0.5 * np.tanh(0.5))])

    def test_default_washout(self):
        layer = res.init_reservoir(5, 1)
        assert res.run(layer, np.zeros(50)).washout == 5
        assert res.run(layer, np.zeros(5000)).washout == 100
        assert res.run(layer, np.zeros(50)).usable.shape == (45, 5)

    def test_bad_input(self):
        layer = res.init_reservoir(5, 2)
        with pytest.raises(DimensionError):
            res.run(layer, np.zeros((10, 3)))
        with pytest.raises(ValueError):
            res.run(layer, np.zeros((10, 2)), washout=10)


class TestConditions:
    def test_condition_values(self):
        layer = res.init_reservoir(25, 1, rho=0.8, seed=5)
        assert res.check_necessary(layer) == (True, pytest.approx(0.8))
        suff = res.check_sufficient(layer)
        assert suff.value == pytest.approx(np.linalg.svd(layer.W_R, compute_uv=False)[0])
        assert suff.value >= 0.8

    def test_empirical_esp_converges_when_contractive(self, rng):
        layer = res.init_reservoir(30, 1, norm=0.9, seed=1)
        result = res.check_esp_empirical(layer, rng.uniform(-1, 1, 300))
        assert result.converged
        assert result.distance_trace.shape == (301,)
        assert np.all(np.diff(result.distance_trace) <= 1e-12)

    def test_empirical_esp_fails_when_unstable(self):
        layer = res.init_reservoir(30, 1, rho=3.0, seed=1)
        result = res.check_esp_empirical(layer, np.zeros(200))
        assert not result.converged

    def test_max_pairwise_distance(self):
        pts = np.array([[0.0, 0.0], [3.0, 4.0], [1.0, 0.0]])
        assert res.max_pairwise_distance(pts) == 5.0
        assert res.max_pairwise_distance(pts[:1]) == 0.0
