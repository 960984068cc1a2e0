import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize
from scipy.special import expit

from randnn import rvfl
from randnn.distributions import Gaussian, Uniform, derive_seed, parse_distribution
from randnn.exceptions import ConvergenceWarning, DimensionError


class TestInit:
    def test_shapes_and_range(self):
        p = rvfl.init_rvfl(3, 20, Uniform(-0.5, 0.5), seed=1)
        assert p.W.shape == (3, 20) and p.b.shape == (20,)
        assert np.all(np.abs(p.W) <= 0.5) and np.all(np.abs(p.b) <= 0.5)
        assert p.n_features == 1 + 3 + 20

    def test_seed_determinism(self):
        a = rvfl.init_rvfl(4, 10, seed=7)
        b = rvfl.init_rvfl(4, 10, seed=7)
        c = rvfl.init_rvfl(4, 10, seed=8)
        assert np.array_equal(a.W, b.W) and np.array_equal(a.b, b.b)
        assert not np.array_equal(a.W, c.W)

    def test_rejects_zero_dims(self):
        with pytest.raises(ValueError):
            rvfl.init_rvfl(0, 5)

    def test_distribution_parsing(self):
        assert parse_distribution("uniform(-2, 3)") == Uniform(-2.0, 3.0)
        assert parse_distribution("gaussian(0.5)") == Gaussian(0.5)
        with pytest.raises(ValueError):
            parse_distribution("cauchy(1)")
        with pytest.raises(ValueError):
            Uniform(1.0, -1.0)

    def test_derive_seed(self):
        assert derive_seed(42, 0) == 42
        assert derive_seed(42, 1) != derive_seed(42, 2)
        assert derive_seed(42, 1) == derive_seed(42, 1)


class TestExpand:
    def test_hand_evaluation(self):
        p = rvfl.RVFLParams(np.array([[1.0, -1.0]]), np.array([0.0, 0.5]))
        H = rvfl.expand(p, np.array([[2.0]]))
        np.testing.assert_allclose(H, [[1.0, 2.0, expit(2.0), expit(-1.5)]])

    def test_optional_blocks(self, rng):
        p = rvfl.init_rvfl(3, 5, seed=0, include_direct_links=False, include_bias_feature=False)
        H = rvfl.expand(p, rng.standard_normal((4, 3)))
        assert H.shape == (4, 5)

    def test_row_partition_independence(self, rng):
        p = rvfl.init_rvfl(6, 30, seed=2)
        X = rng.standard_normal((50, 6))
        whole = rvfl.expand(p, X)
        parts = np.vstack([rvfl.expand(p, X[:17]), rvfl.expand(p, X[17:])])
        assert np.array_equal(whole, parts)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            rvfl.expand(rvfl.init_rvfl(3, 4), np.ones((2, 2)))


class TestReadouts:
    def test_ridge_readout_predicts(self, rng):
        H = rng.standard_normal((40, 5))
        beta = rng.standard_normal(5)
        r = rvfl.train_readout(H, H @ beta, 1e-10)
        np.testing.assert_allclose(r.predict(H), H @ beta, atol=1e-7)

    def test_logistic_matches_bfgs(self, rng):
        H = np.hstack([np.ones((60, 1)), rng.standard_normal((60, 3))])
        y = (H @ [0.2, 1.0, -1.0, 0.5] + 0.5 * rng.standard_normal(60) > 0).astype(float)
        lam = 0.1

        def objective(b):
            z = H @ b
            return np.sum(np.logaddexp(0, z) - y * z) + lam * b @ b

        ref = minimize(objective, np.zeros(4), method="BFGS", options={"gtol": 1e-10}).x
        r = rvfl.train_logistic(H, y, lam, tol=1e-7)
        assert r.converged
        # strong convexity: ||beta - beta*|| <= ||grad|| / (2 lam)
        np.testing.assert_allclose(r.beta, ref, atol=1e-7 / (2 * lam) + 1e-8)
        assert np.all(np.diff(r.history) <= 1e-12)

    def test_logistic_predicts_probabilities(self, rng):
        H = rng.standard_normal((20, 2))
        y = (H[:, 0] > 0).astype(float)
        p = rvfl.train_logistic(H, y, 1.0).predict(H)
        assert np.all((p > 0) & (p < 1))

    def test_logistic_rejects_non_binary(self):
        with pytest.raises(ValueError):
            rvfl.train_logistic(np.ones((3, 1)), np.array([0.0, 1.0, 2.0]), 1.0)

    def test_logistic_reports_stall(self, rng):
        H = np.hstack([np.ones((60, 1)), rng.standard_normal((60, 3))])
        y = (H[:, 1] > 0).astype(float)
        with pytest.warns(ConvergenceWarning, match="stalled"):
            r = rvfl.train_logistic(H, y, 0.1, tol=1e-14, max_iter=100000)
        assert not r.converged and r.n_iter < 100000

    def test_logistic_warns_when_capped(self, rng):
        H = rng.standard_normal((30, 4))
        y = (H[:, 0] > 0).astype(float)
        with pytest.warns(ConvergenceWarning):
            r = rvfl.train_logistic(H, y, 1e-3, max_iter=2)
        assert not r.converged

    def test_l1_soft_threshold_on_orthonormal_design(self, rng):
        Q = np.linalg.qr(rng.standard_normal((30, 6)))[0]
        y = rng.standard_normal(30)
        lam = 0.8
        z = Q.T @ y
        expected = np.sign(z) * np.maximum(np.abs(z) - lam / 2, 0.0)
        r = rvfl.train_l1(Q, y, lam)
        np.testing.assert_allclose(r.beta, expected, atol=1e-8)

    def test_l1_sparsity_grows_with_lambda(self, rng):
        H = rng.standard_normal((50, 20))
        y = H[:, :3] @ [1.0, -2.0, 0.5] + 0.01 * rng.standard_normal(50)
        counts = [rvfl.train_l1(H, y, lam).n_nonzero for lam in (0.01, 1.0, 10.0, 100.0)]
        assert counts == sorted(counts, reverse=True)
        assert counts[-1] < 20

    def test_unknown_loss(self):
        with pytest.raises(ValueError):
            rvfl.train_readout(np.ones((2, 1)), np.ones(2), 1.0, "hinge")


class TestSemiRandom:
    def test_step_power(self):
        np.testing.assert_array_equal(rvfl.step_power([-1.0, 0.0, 2.0], 2), [0.0, 0.0, 4.0])
        np.testing.assert_array_equal(rvfl.step_power([-1.0, 3.0], 1), [0.0, 3.0])

    def test_expansion_layout(self):
        sp = rvfl.SemiRandomParams(np.array([[1.0, -1.0], [0.0, 1.0]]), 1)
        x = np.array([[2.0, 1.0]])
        # gates: relu(2) = 2, relu(-1) = 0
        np.testing.assert_array_equal(rvfl.semi_random_expand(sp, x), [[4.0, 2.0, 0.0, 0.0]])

    def test_rejects_bad_exponent(self):
        with pytest.raises(ValueError):
            rvfl.SemiRandomParams(np.ones((2, 2)), 0)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), s=st.integers(1, 3))
    def test_linear_in_trainable_weights(self, seed, s):
        r = np.random.default_rng(seed)
        sp = rvfl.init_semi_random(3, 4, s, seed=seed)
        X = r.standard_normal((5, 3))
        V = r.standard_normal((4, 3))
        direct = (rvfl.step_power(X @ sp.R, s) * (X @ V.T)).sum(axis=1)
        np.testing.assert_allclose(rvfl.semi_random_expand(sp, X) @ V.reshape(-1), direct, rtol=1e-10, atol=1e-12)


class TestAutoencoderStack:
    def test_shapes_and_transform(self, rng):
        X = rng.standard_normal((80, 6))
        stack = rvfl.stack_autoencoders(X, [5, 3], lam=1e-2, seed=3)
        assert [w.shape for w in stack.weights] == [(6, 5), (5, 3)]
        expected = np.tanh(np.tanh(X @ stack.weights[0]) @ stack.weights[1])
        np.testing.assert_allclose(stack.transform(X), expected)
        assert len(stack.reconstruction_errors) == 2

    def test_encoder_is_transposed_decoder(self, rng):
        X = rng.standard_normal((60, 4))
        stack = rvfl.stack_autoencoders(X, [7], lam=0.1, seed=0)
        p = rvfl.init_rvfl(4, 7, Uniform(), 0, include_direct_links=False, include_bias_feature=True)
        beta = rvfl.train_ridge(rvfl.expand(p, X), X, 0.1).beta
        np.testing.assert_allclose(stack.weights[0], beta[1:].T)

    def test_l1_solver_and_noise(self, rng):
        X = rng.standard_normal((40, 3))
        stack = rvfl.stack_autoencoders(X, [4], lam=0.5, seed=1, solver="l1", noise_std=0.1)
        assert stack.weights[0].shape == (3, 4)

    def test_rejects_empty(self, rng):
        with pytest.raises(ValueError):
            rvfl.stack_autoencoders(rng.standard_normal((5, 2)), [])
