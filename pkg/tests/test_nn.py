"""Network substrate tests: forward oracles, finite-difference gradients,
squashed-Gaussian log densities, Adam arithmetic, checkpoints."""

import math

import numpy as np
import pytest

from pinchisac.nn import (
    Adam,
    DenseNet,
    SquashedGaussianPolicy,
    TanhPolicy,
    load_dense,
    save_dense,
    soft_update,
)


def naive_forward(net: DenseNet, x: np.ndarray) -> np.ndarray:
    """Independent re-implementation: explicit loops, no shared code path."""
    out = np.empty((x.shape[0], net.layer_sizes[-1]))
    for r in range(x.shape[0]):
        a = list(x[r])
        for li, (w, b) in enumerate(zip(net.weights, net.biases)):
            z = []
            for j in range(w.shape[1]):
                acc = b[j]
                for i in range(w.shape[0]):
                    acc += a[i] * w[i, j]
                if li < len(net.weights) - 1:
                    acc = max(acc, 0.0)
                z.append(acc)
            a = z
        out[r] = a
    return out


def fd_param_grads(loss_fn, params, h=1e-5, limit=None, rng=None):
    """Central finite differences over (a subset of) all parameter entries."""
    grads = [np.zeros_like(p) for p in params]
    checked = []
    for pi, p in enumerate(params):
        flat = p.ravel()
        indices = range(flat.size)
        if limit is not None and flat.size > limit:
            indices = rng.choice(flat.size, size=limit, replace=False)
        for i in indices:
            old = flat[i]
            flat[i] = old + h
            lp = loss_fn()
            flat[i] = old - h
            lm = loss_fn()
            flat[i] = old
            grads[pi].ravel()[i] = (lp - lm) / (2 * h)
            checked.append((pi, i))
    return grads, checked


# =====================================================================
# DenseNet forward
# =====================================================================

class TestForward:
    def test_zero_network_outputs_zero(self):
        net = DenseNet([4, 6, 3], np.random.default_rng(0))
        for p in net.params:
            p[...] = 0.0
        y, _ = net.forward(np.random.default_rng(1).standard_normal(4))
        assert np.all(y == 0.0)

    def test_identity_linear_layer(self):
        net = DenseNet([3, 3], np.random.default_rng(0))
        net.weights[0][...] = np.eye(3)
        net.biases[0][...] = 0.0
        x = np.array([0.3, -1.2, 4.0])
        y, _ = net.forward(x)
        assert np.array_equal(y, x)

    def test_matches_naive_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            net = DenseNet([5, 7, 6, 2], rng)
            x = rng.standard_normal((4, 5))
            y, _ = net.forward(x)
            expected = naive_forward(net, x)
            assert np.allclose(y, expected, rtol=1e-12, atol=1e-14)

    def test_vector_and_batch_shapes(self):
        net = DenseNet([4, 5, 2], np.random.default_rng(3))
        single, _ = net.forward(np.zeros(4))
        batch, _ = net.forward(np.zeros((7, 4)))
        assert single.shape == (2,)
        assert batch.shape == (7, 2)

    def test_shape_mismatch_rejected(self):
        net = DenseNet([4, 5, 2], np.random.default_rng(4))
        with pytest.raises(ValueError):
            net.forward(np.zeros(5))

    def test_param_count(self):
        net = DenseNet([4, 8, 2], np.random.default_rng(5))
        assert net.num_params == (4 + 1) * 8 + (8 + 1) * 2


# =====================================================================
# DenseNet backward
# =====================================================================

class TestBackward:
    def test_linear_weight_grad_is_outer_product(self):
        net = DenseNet([3, 2], np.random.default_rng(6))
        x = np.array([[1.0, 2.0, -1.0]])
        _, cache = net.forward(x)
        grads, _ = net.backward(cache, np.array([[1.0, 0.0]]))
        # d(sum of first output)/dW = x outer e_0
        assert np.array_equal(grads[0], np.outer(x[0], [1.0, 0.0]))
        assert np.array_equal(grads[1], [1.0, 0.0])

    def test_zero_output_grad_gives_zero_grads(self):
        net = DenseNet([3, 5, 2], np.random.default_rng(7))
        x = np.random.default_rng(8).standard_normal((4, 3))
        _, cache = net.forward(x)
        grads, gin = net.backward(cache, np.zeros((4, 2)))
        assert all(np.all(g == 0.0) for g in grads)
        assert np.all(gin == 0.0)

    def test_full_finite_difference_small_nets(self):
        rng = np.random.default_rng(9)
        for sizes in ([3, 4, 2], [2, 5, 5, 1], [4, 3, 3, 3, 2]):
            net = DenseNet(sizes, rng)
            x = rng.standard_normal((3, sizes[0]))
            w = rng.standard_normal((3, sizes[-1]))

            def loss():
                return float(np.sum(w * net.forward(x)[0]))

            _, cache = net.forward(x)
            analytic, _ = net.backward(cache, w)
            numeric, _ = fd_param_grads(loss, net.params)
            for a, n in zip(analytic, numeric):
                assert np.allclose(a, n, rtol=1e-4, atol=1e-7)

    def test_input_gradient(self):
        rng = np.random.default_rng(10)
        net = DenseNet([4, 6, 2], rng)
        x = rng.standard_normal(4)
        w = rng.standard_normal(2)
        _, cache = net.forward(x)
        _, gin = net.backward(cache, w)
        h = 1e-6
        for i in range(4):
            xp, xm = x.copy(), x.copy()
            xp[i] += h
            xm[i] -= h
            fd = (float(w @ net.forward(xp)[0]) - float(w @ net.forward(xm)[0])) / (2 * h)
            assert gin[i] == pytest.approx(fd, rel=1e-4, abs=1e-7)

    def test_cache_mismatch_rejected(self):
        rng = np.random.default_rng(11)
        net = DenseNet([3, 4, 2], rng)
        other = DenseNet([3, 5, 2], rng)
        _, cache = other.forward(np.zeros(3))
        with pytest.raises(ValueError):
            net.backward(cache, np.zeros((1, 2)))


# =====================================================================
# Squashed Gaussian policy
# =====================================================================

class TestSquashedPolicy:
    def test_zero_noise_is_mode(self):
        rng = np.random.default_rng(12)
        policy = SquashedGaussianPolicy(3, 2, (8,), rng)
        obs = rng.standard_normal(3)
        action, _, _ = policy.sample(obs, np.zeros(2))
        assert np.allclose(action, policy.mode(obs), atol=1e-15)

    def test_actions_strictly_inside_box(self):
        rng = np.random.default_rng(13)
        policy = SquashedGaussianPolicy(3, 4, (16,), rng)
        obs = np.tile(rng.standard_normal(3), (10_000, 1))
        noise = rng.standard_normal((10_000, 4)) * 5.0
        actions, _, _ = policy.sample(obs, noise)
        assert np.all(actions > -1.0) and np.all(actions < 1.0)

    def test_log_prob_density_integrates_to_one(self):
        """1-D quadrature: p(a) = exp(log_prob at the noise that lands on a)
        must integrate to 1 over (-1, 1)."""
        rng = np.random.default_rng(14)
        policy = SquashedGaussianPolicy(2, 1, (12,), rng)
        obs = np.array([0.4, -0.8])
        out, _ = policy.trunk.forward(obs)
        mean, log_std = out[0], np.clip(out[1], -20.0, 2.0)
        std = math.exp(log_std)

        grid = np.linspace(-1 + 1e-9, 1 - 1e-9, 200_001)
        z = np.arctanh(grid)
        noise = (z - mean) / std
        obs_batch = np.tile(obs, (grid.size, 1))
        _, log_probs, _ = policy.sample(obs_batch, noise[:, None])
        density = np.exp(log_probs)
        integral = np.trapezoid(density, grid)
        assert integral == pytest.approx(1.0, abs=1e-3)

    def test_log_prob_matches_independent_formula(self):
        rng = np.random.default_rng(15)
        policy = SquashedGaussianPolicy(3, 2, (8,), rng)
        obs = rng.standard_normal(3)
        noise = rng.standard_normal(2)
        action, log_prob, _ = policy.sample(obs, noise)
        out, _ = policy.trunk.forward(obs)
        mean, log_std = out[:2], np.clip(out[2:], -20, 2)
        std = np.exp(log_std)
        z = mean + std * noise
        gauss = -0.5 * ((z - mean) / std) ** 2 - np.log(std) - 0.5 * math.log(2 * math.pi)
        expected = float(np.sum(gauss - np.log(1 - np.tanh(z) ** 2)))
        assert log_prob == pytest.approx(expected, rel=1e-9)

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(16)
        policy = SquashedGaussianPolicy(2, 2, (5,), rng)
        obs = rng.standard_normal((4, 2))
        noise = rng.standard_normal((4, 2))
        upstream_a = rng.standard_normal((4, 2))
        upstream_lp = rng.standard_normal(4)

        def loss():
            a, lp, _ = policy.sample(obs, noise)
            return float(np.sum(upstream_a * a) + np.sum(upstream_lp * lp))

        _, _, cache = policy.sample(obs, noise)
        analytic = policy.backward(cache, action_grad=upstream_a,
                                   log_prob_grad=upstream_lp)
        numeric, _ = fd_param_grads(loss, policy.params)
        for a, n in zip(analytic, numeric):
            assert np.allclose(a, n, rtol=1e-4, atol=1e-7)

    def test_tanh_policy_gradients(self):
        rng = np.random.default_rng(17)
        actor = TanhPolicy(3, 2, (6,), rng)
        obs = rng.standard_normal((4, 3))
        upstream = rng.standard_normal((4, 2))

        def loss():
            return float(np.sum(upstream * actor.forward(obs)[0]))

        _, cache = actor.forward(obs)
        analytic = actor.backward(cache, upstream)
        numeric, _ = fd_param_grads(loss, actor.params)
        for a, n in zip(analytic, numeric):
            assert np.allclose(a, n, rtol=1e-4, atol=1e-7)


# =====================================================================
# Adam
# =====================================================================

class TestAdam:
    def test_zero_gradient_leaves_params(self):
        p = np.array([1.0, -2.0])
        opt = Adam([p], 1e-3)
        opt.step([p], [np.zeros(2)])
        assert np.array_equal(p, [1.0, -2.0])
        assert opt.step_count == 1

    def test_first_step_magnitude(self):
        lr = 1e-3
        p = np.array([1.0, -2.0, 0.5])
        g = np.array([0.7, -0.01, 3.0])
        before = p.copy()
        Adam([p], lr).step([p], [g])
        expected = -lr * g / (np.abs(g) + 1e-8)
        assert np.allclose(p - before, expected, rtol=1e-6)

    def test_deterministic(self):
        rng = np.random.default_rng(18)
        g = rng.standard_normal(5)
        p1, p2 = rng.standard_normal(5), None
        p2 = p1.copy()
        o1, o2 = Adam([p1], 1e-3), Adam([p2], 1e-3)
        for _ in range(10):
            o1.step([p1], [g])
            o2.step([p2], [g])
        assert np.array_equal(p1, p2)

    def test_non_finite_gradient_halts(self):
        p = np.zeros(3)
        opt = Adam([p], 1e-3)
        with pytest.raises(FloatingPointError):
            opt.step([p], [np.array([1.0, np.nan, 0.0])])
        with pytest.raises(FloatingPointError):
            opt.step([p], [np.array([np.inf, 0.0, 0.0])])

    def test_shape_mismatch_rejected(self):
        p = np.zeros(3)
        opt = Adam([p], 1e-3)
        with pytest.raises(ValueError):
            opt.step([p], [np.zeros(4)])


# =====================================================================
# Soft updates
# =====================================================================

class TestSoftUpdate:
    def test_rate_one_copies(self):
        rng = np.random.default_rng(19)
        online = DenseNet([3, 4, 2], rng)
        target = DenseNet([3, 4, 2], rng)
        soft_update(target, online, 1.0)
        for t, o in zip(target.params, online.params):
            assert np.array_equal(t, o)

    def test_hand_computed_value(self):
        rng = np.random.default_rng(20)
        online = DenseNet([2, 2], rng)
        target = DenseNet([2, 2], rng)
        for p in online.params:
            p[...] = 1.0
        for p in target.params:
            p[...] = 0.0
        soft_update(target, online, 0.01)
        for p in target.params:
            assert np.allclose(p, 0.01, rtol=0, atol=0)

    def test_geometric_convergence_ratio(self):
        rng = np.random.default_rng(21)
        online = DenseNet([3, 4, 2], rng)
        target = DenseNet([3, 4, 2], rng)
        rate = 0.01
        gaps = []
        for _ in range(6):
            gap = max(np.max(np.abs(t - o))
                      for t, o in zip(target.params, online.params))
            gaps.append(gap)
            soft_update(target, online, rate)
        for before, after in zip(gaps, gaps[1:]):
            assert after / before == pytest.approx(1.0 - rate, abs=1e-12)


# =====================================================================
# Checkpoints
# =====================================================================

class TestCheckpoints:
    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(22)
        net = DenseNet([5, 16, 16, 3], rng)
        path = tmp_path / "net.npz"
        save_dense(net, path)
        loaded = load_dense(path)
        assert loaded.layer_sizes == net.layer_sizes
        for a, b in zip(loaded.params, net.params):
            assert np.array_equal(a, b)
        x = rng.standard_normal(5)
        assert np.array_equal(loaded.forward(x)[0], net.forward(x)[0])

    def test_version_checked(self, tmp_path):
        rng = np.random.default_rng(23)
        net = DenseNet([2, 2], rng)
        path = tmp_path / "net.npz"
        arrays = {f"p{i}": p for i, p in enumerate(net.params)}
        np.savez(path, format_version=np.array([999]),
                 layer_sizes=np.array(net.layer_sizes), **arrays)
        with pytest.raises(ValueError, match="version"):
            load_dense(path)
