import numpy as np
import pytest

from randnn import deepesn as D
from randnn import diagnostics as G
from randnn import reservoir as R
from randnn.exceptions import DimensionError


def orthogonal_layer(n, rho, seed=0):
    Q = np.linalg.qr(np.random.default_rng(seed).standard_normal((n, n)))[0]
    return R.ReservoirLayer(np.zeros((1, n)), rho * Q)


class TestMemoryCapacity:
    def test_memoryless(self):
        layer = R.ReservoirLayer(np.random.default_rng(0).uniform(-1, 1, (1, 20)), np.zeros((20, 20)))
        report = G.memory_capacity(layer, K=10, T=2000)
        assert report.r2.max() < 0.02

    def test_linear_ring_near_limit(self):
        ring = R.init_reservoir(20, 1, "ring", rho=0.9, seed=0)
        with pytest.warns(UserWarning):
            report = G.memory_capacity(ring, K=40, T=4000, activation="linear")
        assert report.total >= 18.0

    def test_bounded_by_state_dimension(self):
        for seed in range(3):
            layer = R.init_reservoir(10, 1, rho=0.95, seed=seed)
            with pytest.warns(UserWarning):
                report = G.memory_capacity(layer, K=30, T=3000, activation="linear", seed=seed)
            assert report.total <= 10 + 1 + 0.05
            assert np.all((report.r2 >= 0) & (report.r2 <= 1))

    def test_deterministic(self):
        layer = R.init_reservoir(15, 1, seed=1)
        a = G.memory_capacity(layer, K=10, T=400, seed=3)
        b = G.memory_capacity(layer, K=10, T=400, seed=3)
        assert np.array_equal(a.r2, b.r2)

    def test_deep_system(self):
        dr = D.init_deep([10, 10], seed=0)
        report = G.memory_capacity(dr, K=15, T=600)
        assert report.r2.shape == (15,) and report.total > 0

    def test_preconditions(self):
        layer = R.init_reservoir(10, 1)
        with pytest.raises(ValueError):
            G.memory_capacity(layer, K=10, T=100)
        with pytest.raises(DimensionError):
            G.memory_capacity(R.init_reservoir(10, 2), K=5, T=200)
        with pytest.raises(ValueError):
            G.memory_capacity(layer, K=5, activation="relu")


class TestStateEntropy:
    def test_unit_gaussian(self, rng):
        S = rng.standard_normal((200000, 3))
        S = (S - S.mean(0)) @ np.linalg.inv(np.linalg.cholesky(np.cov(S, rowvar=False))).T
        expected = 0.5 * np.log((2 * np.pi * np.e) ** 3)
        assert G.state_entropy(S) == pytest.approx(expected, rel=0.02)

    def test_constant_states_hit_floor(self):
        eps = 1e-12
        value = G.state_entropy(np.ones((50, 4)), eps=eps)
        assert value == pytest.approx(0.5 * 4 * np.log(2 * np.pi * np.e * eps))

    def test_permutation_invariant(self, rng):
        S = rng.standard_normal((100, 5))
        assert G.state_entropy(S[:, [3, 1, 4, 0, 2]]) == pytest.approx(G.state_entropy(S))

    def test_monotone_in_noise(self, rng):
        S = rng.standard_normal((500, 4)) * [1.0, 0.1, 0.01, 0.5]
        noise = rng.standard_normal(S.shape)
        values = [G.state_entropy(S + s * noise) for s in (0.0, 0.1, 0.5, 1.0)]
        assert values == sorted(values)

    def test_trace_drops_washout(self, rng):
        S = rng.standard_normal((60, 3))
        assert G.state_entropy(R.StateTrace(S, 10)) == G.state_entropy(S[10:])

    def test_too_short(self):
        with pytest.raises(ValueError):
            G.state_entropy(np.zeros((3, 5)))


class TestLyapunov:
    @pytest.mark.parametrize("rho", [0.5, 0.9, 1.1])
    def test_orthogonal_linear_anchor(self, rho):
        layer = orthogonal_layer(10, rho)
        report = G.local_lyapunov_spectrum(layer, np.zeros(200), m=3, activation="linear")
        np.testing.assert_allclose(report.exponents, np.log(rho), atol=1e-12)

    def test_tanh_at_origin_matches_linear(self):
        layer = orthogonal_layer(8, 0.9, seed=1)
        report = G.local_lyapunov_spectrum(layer, np.zeros(100), m=2)
        assert report.max_exponent == pytest.approx(np.log(0.9), abs=1e-12)

    def test_contractive_is_negative(self, rng):
        for seed in range(3):
            layer = R.init_reservoir(30, 1, rho=0.9, seed=seed)
            report = G.local_lyapunov_spectrum(layer, rng.uniform(-1, 1, 300), m=5, window=200)
            assert report.max_exponent < 0
            assert np.all(np.diff(report.exponents) <= 0)

    def test_nilpotent_is_floored(self):
        layer = R.ReservoirLayer(np.ones((1, 4)), np.zeros((4, 4)))
        report = G.local_lyapunov_spectrum(layer, np.zeros(20), m=2)
        assert report.floored and np.all(np.isfinite(report.exponents))
        assert report.max_exponent <= G.LOG_FLOOR + 1e-9

    def test_reorthonormalization_interval(self):
        layer = orthogonal_layer(6, 0.8)
        a = G.local_lyapunov_spectrum(layer, np.zeros(60), m=2, activation="linear", reorth_every=5)
        np.testing.assert_allclose(a.exponents, np.log(0.8), atol=1e-12)

    def test_preconditions(self):
        layer = R.init_reservoir(5, 1)
        with pytest.raises(ValueError):
            G.local_lyapunov_spectrum(layer, np.zeros(10), m=6)
        with pytest.raises(ValueError):
            G.local_lyapunov_spectrum(layer, np.zeros(10), window=11)
