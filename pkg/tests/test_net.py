import numpy as np
import pytest

from ecml.errors import ConfigError
from ecml.net import (AdamState, MlpConfig, MlpParams, adam_step, backward,
                      finite_diff_check, forward, init_adam, init_params)


def params_equal(a, b):
    return all(np.array_equal(x, y) for x, y in zip(a.arrays(), b.arrays()))


class TestInit:
    def test_deterministic_in_seed(self):
        cfg = MlpConfig(4, [8], 2, seed=7)
        assert params_equal(init_params(cfg), init_params(cfg))

    def test_different_seeds_differ(self):
        a = init_params(MlpConfig(4, [8], 2, seed=7))
        b = init_params(MlpConfig(4, [8], 2, seed=8))
        assert not params_equal(a, b)

    def test_shapes(self):
        p = init_params(MlpConfig(4, [8], 2))
        assert p.weights[0].shape == (4, 8)
        assert p.weights[1].shape == (8, 2)
        assert p.biases[0].shape == (8,)
        assert p.biases[1].shape == (2,)

    def test_he_scale_bound(self):
        # > 1e4 draws per layer; truncation keeps |w| <= 3 sqrt(2/fan_in)
        p = init_params(MlpConfig(100, [110], 50, seed=3))
        for w in p.weights:
            scale = np.sqrt(2.0 / w.shape[0])
            assert np.abs(w).max() <= 3.0 * scale
            assert abs(w.std() - scale) < 0.05 * scale  # near-He spread

    def test_zero_dimension_rejected(self):
        with pytest.raises(ConfigError):
            MlpConfig(0, [8], 2)
        with pytest.raises(ConfigError):
            MlpConfig(4, [0], 2)


class TestForward:
    def test_zero_params_give_zero_output(self, rng):
        p = init_params(MlpConfig(3, [4], 2))
        zero = p.zeros_like()
        emb, _ = forward(zero, rng.normal(size=(5, 3)))
        assert np.array_equal(emb, np.zeros((5, 2)))

    def test_normalized_rows_unit_norm(self, rng):
        p = init_params(MlpConfig(3, [4], 2, seed=1))
        emb, _ = forward(p, rng.normal(size=(6, 3)), normalize=True)
        assert np.abs(np.linalg.norm(emb, axis=1) - 1.0).max() <= 1e-12

    def test_identity_layer(self, rng):
        p = MlpParams([np.eye(3)], [np.zeros(3)])
        x = rng.normal(size=(4, 3))
        emb, _ = forward(p, x)
        assert np.allclose(emb, x)

    def test_width_mismatch(self, rng):
        p = init_params(MlpConfig(3, [4], 2))
        with pytest.raises(ValueError):
            forward(p, rng.normal(size=(4, 5)))

    def test_nonfinite_input(self):
        p = init_params(MlpConfig(3, [4], 2))
        x = np.full((2, 3), np.nan)
        with pytest.raises(ValueError):
            forward(p, x)


class TestBackward:
    def test_zero_gradient_propagates_zero(self, rng):
        p = init_params(MlpConfig(3, [4], 2, seed=2))
        _, trace = forward(p, rng.normal(size=(5, 3)))
        grads, input_grads = backward(trace, np.zeros((5, 2)), p)
        assert all(np.array_equal(g, np.zeros_like(g)) for g in grads.arrays())
        assert np.array_equal(input_grads, np.zeros((5, 3)))

    def test_single_linear_layer_closed_form(self, rng):
        p = MlpParams([rng.normal(size=(3, 2))], [np.zeros(2)])
        x = rng.normal(size=(5, 3))
        _, trace = forward(p, x)
        grads, _ = backward(trace, np.ones((5, 2)), p)
        assert np.allclose(grads.weights[0], x.T @ np.ones((5, 2)))

    def test_three_layer_finite_difference(self, rng):
        cfg = MlpConfig(3, [5, 4], 2, seed=5)
        params = init_params(cfg)
        x = rng.normal(size=(6, 3))
        coeff = rng.normal(size=(6, 2))

        def objective(p):
            emb, trace = forward(p, x)
            value = float(np.sum(coeff * emb))
            grads, _ = backward(trace, coeff, p)
            return value, grads

        assert finite_diff_check(objective, params, 1e-5) <= 1e-4

    def test_normalization_tangency(self, rng):
        cfg = MlpConfig(3, [32], 4, seed=6, normalize_output=True)
        params = init_params(cfg)
        # shift inputs positive so no row dies entirely in the ReLU layer
        x = np.abs(rng.normal(size=(7, 3))) + 0.1
        emb, trace = forward(params, x, normalize=True)
        assert np.isfinite(emb).all()
        g = rng.normal(size=emb.shape)
        from ecml.net import _normalize_backward
        g_pre = _normalize_backward(trace.pre_norm, emb, g)
        dots = np.abs(np.sum(g_pre * emb, axis=1))
        assert dots.max() <= 1e-8

    def test_normalized_net_finite_difference(self, rng):
        cfg = MlpConfig(3, [5], 4, seed=9, normalize_output=True)
        params = init_params(cfg)
        x = rng.normal(size=(6, 3))
        coeff = rng.normal(size=(6, 4))

        def objective(p):
            emb, trace = forward(p, x, normalize=True)
            grads, _ = backward(trace, coeff, p)
            return float(np.sum(coeff * emb)), grads

        assert finite_diff_check(objective, params, 1e-5) <= 1e-4

    def test_last_layer_only_stops_upstream(self, rng):
        params = init_params(MlpConfig(3, [5], 2, seed=3))
        x = rng.normal(size=(4, 3))
        _, trace = forward(params, x)
        g = rng.normal(size=(4, 2))
        grads, input_grads = backward(trace, g, params, last_layer_only=True)
        assert np.array_equal(grads.weights[0], np.zeros_like(grads.weights[0]))
        assert np.array_equal(input_grads, np.zeros_like(x))
        # last layer matches the full backward pass
        full, _ = backward(trace, g, params)
        assert np.array_equal(grads.weights[-1], full.weights[-1])
        assert np.array_equal(grads.biases[-1], full.biases[-1])


class TestAdam:
    def test_zero_gradient_fixed_point(self):
        p = init_params(MlpConfig(3, [4], 2, seed=1))
        st = init_adam(p)
        out = adam_step(p, p.zeros_like(), st, lr=0.1, weight_decay=0.0)
        assert all(np.array_equal(a, b) for a, b in zip(out.arrays(), p.arrays()))

    def test_degenerate_betas_reduce_to_sign_sgd(self):
        p = MlpParams([np.array([[1.0]])], [np.array([0.0])])
        st = AdamState(p.zeros_like(), p.zeros_like(), 0, beta1=0.0, beta2=0.0, eps=0.0)
        g = MlpParams([np.array([[1.0]])], [np.array([-4.0])])
        out = adam_step(p, g, st, lr=0.1)
        assert out.weights[0][0, 0] == pytest.approx(0.9, abs=1e-15)
        assert out.biases[0][0] == pytest.approx(0.1, abs=1e-15)

    def test_quadratic_convergence(self):
        p = MlpParams([np.array([[0.0]])], [np.array([0.0])])
        st = init_adam(p)
        for _ in range(100):
            g = MlpParams([2.0 * (p.weights[0] - 3.0)], [np.zeros(1)])
            p = adam_step(p, g, st, lr=0.1)
        assert abs(p.weights[0][0, 0] - 3.0) < 0.05

    def test_nonfinite_gradient_rejected(self):
        p = init_params(MlpConfig(3, [4], 2))
        st = init_adam(p)
        bad = p.zeros_like()
        bad.weights[0][0, 0] = np.nan
        with pytest.raises(ValueError):
            adam_step(p, bad, st, lr=0.1)

    def test_step_counter_increases(self):
        p = init_params(MlpConfig(3, [4], 2))
        st = init_adam(p)
        for expected in (1, 2, 3):
            p = adam_step(p, p.zeros_like(), st, lr=0.1)
            assert st.step == expected


class TestFiniteDiffCheck:
    def test_linear_objective_near_exact(self):
        params = MlpParams([np.array([[1.0, 2.0]])], [np.array([0.5, -0.5])])
        coeff_w = np.array([[3.0, -1.0]])
        coeff_b = np.array([2.0, 4.0])

        def objective(p):
            value = float(np.sum(coeff_w * p.weights[0]) + np.sum(coeff_b * p.biases[0]))
            return value, MlpParams([coeff_w.copy()], [coeff_b.copy()])

        assert finite_diff_check(objective, params, 1e-5) <= 1e-10

    def test_corrupted_gradient_detected(self, rng):
        params = init_params(MlpConfig(3, [4], 2, seed=11))
        x = rng.normal(size=(5, 3))

        def objective(p):
            emb, trace = forward(p, x)
            grads, _ = backward(trace, np.ones_like(emb), p)
            grads.weights[0][0, 0] *= 2.0
            return float(emb.sum()), grads

        assert finite_diff_check(objective, params, 1e-5) >= 0.3
