"""Dense networks with exact manual gradients; no autodiff framework.

Provides the pieces the agents are built from: a relu MLP with hand-written
backprop (`DenseNet`), a tanh-squashed diagonal-Gaussian policy head with
reparameterized sampling (`SquashedGaussianPolicy`), a deterministic tanh
policy (`TanhPolicy`), the Adam optimizer, soft target updates, and a
versioned checkpoint format.

Everything is float64 and deterministic given explicit inputs: sampling
takes the standard-normal draw as an argument instead of owning a generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

CHECKPOINT_FORMAT_VERSION = 1

_LOG_2PI = math.log(2.0 * math.pi)
_LOG_2 = math.log(2.0)
_ALMOST_ONE = math.nextafter(1.0, 0.0)


def _as_batch(x: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return x[None, :], True
    if x.ndim == 2:
        return x, False
    raise ValueError(f"expected a vector or a batch of vectors, got shape {x.shape}")


@dataclass(eq=False)
class ForwardCache:
    """Activations saved by DenseNet.forward for the matching backward.

    Hidden activations are post-relu; backward recovers each relu mask as
    activation > 0, which is equivalent and keeps forward lean."""

    activations: list[np.ndarray]   # per layer input, activations[0] is the net input
    squeeze: bool


class DenseNet:
    """Fully connected net: relu on hidden layers, identity output.

    Parameters live in ``params`` as [W0, b0, W1, b1, ...]; optimizers and
    soft updates mutate those arrays in place.
    """

    def __init__(self, layer_sizes: list[int], rng: np.random.Generator):
        if len(layer_sizes) < 2 or any(s < 1 for s in layer_sizes):
            raise ValueError(f"bad layer sizes {layer_sizes}")
        self.layer_sizes = list(layer_sizes)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(layer_sizes, layer_sizes[1:]):
            bound = 1.0 / math.sqrt(fan_in)
            self.weights.append(rng.uniform(-bound, bound, (fan_in, fan_out)))
            self.biases.append(rng.uniform(-bound, bound, fan_out))

    @property
    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    @property
    def num_params(self) -> int:
        return sum(p.size for p in self.params)

    def copy(self) -> "DenseNet":
        clone = object.__new__(DenseNet)
        clone.layer_sizes = list(self.layer_sizes)
        clone.weights = [w.copy() for w in self.weights]
        clone.biases = [b.copy() for b in self.biases]
        return clone

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
        """Compute outputs and cache what backward needs.

        Accepts a single input vector or a (batch, in_dim) array; the output
        mirrors the input's shape convention.
        """
        batch, squeeze = _as_batch(x)
        if batch.shape[1] != self.layer_sizes[0]:
            raise ValueError(
                f"input dim {batch.shape[1]} != layer size {self.layer_sizes[0]}")
        activations = [batch]
        a = batch
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w
            z += b
            if i < last:
                np.maximum(z, 0.0, out=z)
            a = z
            activations.append(a)
        out = a[0] if squeeze else a
        return out, ForwardCache(activations, squeeze)

    def backward(self, cache: ForwardCache,
                 output_grad: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
        """Exact gradients for the loss whose d(loss)/d(output) is supplied.

        Returns (param_grads, input_grad); param_grads aligns with ``params``.
        The cache must come from this net's matching forward call.
        """
        if len(cache.activations) != len(self.weights) + 1:
            raise ValueError("cache does not match network depth")
        grad, _ = _as_batch(output_grad)
        if grad.shape != cache.activations[-1].shape:
            raise ValueError(
                f"output_grad shape {grad.shape} != forward output shape "
                f"{cache.activations[-1].shape}")
        weight_grads: list[np.ndarray] = [None] * len(self.weights)
        bias_grads: list[np.ndarray] = [None] * len(self.weights)
        delta = grad
        for i in range(len(self.weights) - 1, -1, -1):
            a_prev = cache.activations[i]
            if a_prev.shape[1] != self.weights[i].shape[0]:
                raise ValueError("cache does not match network shapes")
            weight_grads[i] = a_prev.T @ delta
            bias_grads[i] = delta.sum(axis=0)
            delta = delta @ self.weights[i].T
            if i > 0:
                # hidden activations are post-relu, so a>0 is the relu mask
                np.multiply(delta, a_prev > 0.0, out=delta)
        param_grads = []
        for wg, bg in zip(weight_grads, bias_grads):
            param_grads.append(wg)
            param_grads.append(bg)
        input_grad = delta[0] if cache.squeeze else delta
        return param_grads, input_grad


def soft_update(target: "DenseNet", online: "DenseNet", rate: float) -> None:
    """Blend online parameters into the target: t <- rate*o + (1-rate)*t."""
    for tp, op in zip(target.params, online.params):
        tp *= (1.0 - rate)
        tp += rate * op


class Adam:
    """Adaptive-moment optimizer with bias correction, mutating params in
    place. Deterministic; raises on non-finite gradients so a diverged run
    halts instead of silently spreading NaNs."""

    def __init__(self, params: list[np.ndarray], learning_rate: float,
                 beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.step_count = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        if len(params) != len(self.m) or len(grads) != len(params):
            raise ValueError("parameter/gradient count mismatch")
        for g in grads:
            # a sum that hits inf or nan flags any non-finite entry
            if not math.isfinite(float(np.sum(g))):
                raise FloatingPointError("non-finite gradient; training halted")
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1 ** t
        bc2 = 1.0 - self.beta2 ** t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            if p.shape != g.shape:
                raise ValueError("parameter/gradient shape mismatch")
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * np.square(g)
            denom = np.sqrt(v / bc2)
            denom += self.epsilon
            p -= self.learning_rate / bc1 * m / denom


# ============================================================================
# Policies
# ============================================================================

@dataclass(eq=False)
class PolicyCache:
    trunk_cache: ForwardCache
    mean: np.ndarray
    log_std: np.ndarray
    clip_mask: np.ndarray
    std: np.ndarray
    noise: np.ndarray
    action: np.ndarray
    squeeze: bool


class SquashedGaussianPolicy:
    """tanh-squashed diagonal Gaussian over (-1, 1)^action_dim.

    The trunk outputs [mean, log_std] per action dimension; log_std is
    clamped to [-20, 2]. Sampling is reparameterized: the caller supplies the
    standard-normal draw, and backward() pushes gradients through both the
    action path and the log-density path.
    """

    LOG_STD_MIN = -20.0
    LOG_STD_MAX = 2.0

    def __init__(self, obs_dim: int, action_dim: int,
                 hidden_sizes: tuple[int, ...], rng: np.random.Generator):
        self.obs_dim = obs_dim
        self.action_dim = action_dim
        self.trunk = DenseNet([obs_dim, *hidden_sizes, 2 * action_dim], rng)

    @property
    def params(self) -> list[np.ndarray]:
        return self.trunk.params

    def _heads(self, out: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        mean = out[:, :self.action_dim]
        raw_log_std = out[:, self.action_dim:]
        clip_mask = (raw_log_std >= self.LOG_STD_MIN) & (raw_log_std <= self.LOG_STD_MAX)
        log_std = np.clip(raw_log_std, self.LOG_STD_MIN, self.LOG_STD_MAX)
        return mean, log_std, clip_mask

    def sample(self, obs: np.ndarray,
               noise: np.ndarray) -> tuple[np.ndarray, np.ndarray, PolicyCache]:
        """action = tanh(mean + std*noise); log_prob is the Gaussian
        log-density minus the tanh change-of-variables correction."""
        obs_b, squeeze = _as_batch(obs)
        out, trunk_cache = self.trunk.forward(obs_b)
        mean, log_std, clip_mask = self._heads(out)
        noise_b = np.asarray(noise, dtype=float).reshape(mean.shape)
        std = np.exp(log_std)
        z = mean + std * noise_b
        action = np.tanh(z)
        # tanh rounds to exactly +-1 for |z| > ~19; keep the box strictly open
        np.clip(action, -_ALMOST_ONE, _ALMOST_ONE, out=action)
        # log(1 - tanh(z)^2) = 2*(log 2 - |z| - log1p(exp(-2|z|))), stable for large |z|
        log_one_minus_a2 = 2.0 * (_LOG_2 - np.abs(z) - np.log1p(np.exp(-2.0 * np.abs(z))))
        log_prob = (-0.5 * noise_b ** 2 - log_std - 0.5 * _LOG_2PI
                    - log_one_minus_a2).sum(axis=1)
        cache = PolicyCache(trunk_cache, mean, log_std, clip_mask, std,
                            noise_b, action, squeeze)
        if squeeze:
            return action[0], float(log_prob[0]), cache
        return action, log_prob, cache

    def mode(self, obs: np.ndarray) -> np.ndarray:
        """Deterministic action: tanh of the mean (zero-noise sample)."""
        obs_b, squeeze = _as_batch(obs)
        out, _ = self.trunk.forward(obs_b)
        mean = out[:, :self.action_dim]
        action = np.tanh(mean)
        return action[0] if squeeze else action

    def backward(self, cache: PolicyCache,
                 action_grad: np.ndarray | None = None,
                 log_prob_grad: np.ndarray | None = None) -> list[np.ndarray]:
        """Gradients of L = sum_i [dL/da_i . a_i + dL/dlogp_i * logp_i] w.r.t.
        the trunk parameters, holding the supplied noise fixed
        (reparameterization). Either upstream gradient may be omitted.

        Pathwise derivatives used, per action dimension j:
            da/dmean = 1 - a^2            da/dlog_std = (1 - a^2) * std * noise
            dlogp/dmean = 2a              dlogp/dlog_std = 2a*std*noise - 1
        """
        a = cache.action
        g_mean = np.zeros_like(a)
        g_log_std = np.zeros_like(a)
        if action_grad is not None:
            ga = np.asarray(action_grad, dtype=float).reshape(a.shape)
            gz = ga * (1.0 - a ** 2)
            g_mean += gz
            g_log_std += gz * cache.std * cache.noise
        if log_prob_grad is not None:
            glp = np.asarray(log_prob_grad, dtype=float).reshape(a.shape[0], 1)
            g_mean += glp * 2.0 * a
            g_log_std += glp * (2.0 * a * cache.std * cache.noise - 1.0)
        g_log_std = g_log_std * cache.clip_mask
        out_grad = np.concatenate([g_mean, g_log_std], axis=1)
        grads, _ = self.trunk.backward(cache.trunk_cache, out_grad)
        return grads


@dataclass(eq=False)
class TanhPolicyCache:
    trunk_cache: ForwardCache
    action: np.ndarray


class TanhPolicy:
    """Deterministic policy: tanh of an MLP, output in (-1, 1)^action_dim."""

    def __init__(self, obs_dim: int, action_dim: int,
                 hidden_sizes: tuple[int, ...], rng: np.random.Generator):
        self.obs_dim = obs_dim
        self.action_dim = action_dim
        self.trunk = DenseNet([obs_dim, *hidden_sizes, action_dim], rng)

    @property
    def params(self) -> list[np.ndarray]:
        return self.trunk.params

    def act(self, obs: np.ndarray) -> np.ndarray:
        out, _ = self.trunk.forward(obs)
        return np.tanh(out)

    def forward(self, obs: np.ndarray) -> tuple[np.ndarray, TanhPolicyCache]:
        out, trunk_cache = self.trunk.forward(obs)
        action = np.tanh(out)
        return action, TanhPolicyCache(trunk_cache, action)

    def backward(self, cache: TanhPolicyCache,
                 action_grad: np.ndarray) -> list[np.ndarray]:
        grad = np.asarray(action_grad, dtype=float).reshape(cache.action.shape)
        grads, _ = self.trunk.backward(cache.trunk_cache,
                                       grad * (1.0 - cache.action ** 2))
        return grads

    def copy(self) -> "TanhPolicy":
        clone = object.__new__(TanhPolicy)
        clone.obs_dim = self.obs_dim
        clone.action_dim = self.action_dim
        clone.trunk = self.trunk.copy()
        return clone


# ============================================================================
# Checkpoints
# ============================================================================

def save_dense(net: DenseNet, path) -> None:
    """Write a net to ``path`` (npz): a format version tag, the layer sizes,
    and each parameter array in row-major order under p0, p1, ..."""
    arrays = {f"p{i}": p for i, p in enumerate(net.params)}
    np.savez(path,
             format_version=np.array([CHECKPOINT_FORMAT_VERSION]),
             layer_sizes=np.array(net.layer_sizes),
             **arrays)


def load_dense(path) -> DenseNet:
    """Load a net saved by save_dense; round-trips bit-exactly."""
    with np.load(path) as data:
        version = int(data["format_version"][0])
        if version != CHECKPOINT_FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint format version {version}")
        sizes = [int(s) for s in data["layer_sizes"]]
        net = object.__new__(DenseNet)
        net.layer_sizes = sizes
        net.weights = []
        net.biases = []
        for i in range(len(sizes) - 1):
            net.weights.append(np.array(data[f"p{2 * i}"], dtype=float))
            net.biases.append(np.array(data[f"p{2 * i + 1}"], dtype=float))
        expected = [(sizes[i], sizes[i + 1]) for i in range(len(sizes) - 1)]
        for w, shape in zip(net.weights, expected):
            if w.shape != shape:
                raise ValueError("checkpoint parameter shapes do not match layer sizes")
    return net
