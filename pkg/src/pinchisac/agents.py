"""Off-policy agents over the dense-network substrate.

``MerlAgent`` is the maximum-entropy learner: a squashed-Gaussian policy,
twin critics with target copies, soft-Bellman targets

    y = r + gamma * (min_i Q'_i(s', a~') - rho * log pi(a~'|s'))

with the next action freshly resampled, and a temperature rho tuned in log
space toward a target entropy. ``Td3Agent`` and ``DdpgAgent`` are the
deterministic-policy baselines; they share the replay buffer, the critic
regression path, and the soft-update rule, differing only in their target
formulas and exploration noise. ``RandomAgent`` closes out the benchmark set.

All randomness flows through one per-agent generator, so training runs are
reproducible from (seed, transition sequence).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .nn import (Adam, DenseNet, SquashedGaussianPolicy, TanhPolicy,
                 soft_update as soft_update_params)

AGENT_CHECKPOINT_VERSION = 1


class TrainingDiverged(RuntimeError):
    """A loss or gradient went non-finite; the run must halt."""


@dataclass(frozen=True)
class AgentConfig:
    """Hyperparameters shared by all learners (the baselines ignore the
    entropy fields, MERL ignores the noise/delay fields)."""

    hidden_sizes: tuple[int, ...] = (128, 128)
    learning_rate: float = 3e-4
    discount: float = 0.97
    soft_update_rate: float = 0.01
    batch_size: int = 256
    replay_capacity: int = 100_000
    warmup_transitions: int = 1000
    updates_per_step: int = 1
    initial_temperature: float = 0.1
    target_entropy: float | None = None
    exploration_noise: float = 0.1
    target_policy_noise: float = 0.2
    target_noise_clip: float = 0.5
    policy_delay: int = 2


@dataclass(eq=False)
class Transition:
    obs: np.ndarray
    action: np.ndarray
    reward: float
    next_obs: np.ndarray
    # 1.0 when the next state may be bootstrapped from (ordinary steps and
    # horizon expiry), 0.0 for true terminals (energy exhaustion)
    bootstrap: float


@dataclass(eq=False)
class Batch:
    obs: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_obs: np.ndarray
    bootstrap: np.ndarray


class ReplayBuffer:
    """FIFO ring of transitions with uniform without-replacement sampling."""

    def __init__(self, capacity: int, obs_dim: int, action_dim: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._obs = np.zeros((capacity, obs_dim))
        self._actions = np.zeros((capacity, action_dim))
        self._rewards = np.zeros(capacity)
        self._next_obs = np.zeros((capacity, obs_dim))
        self._bootstrap = np.zeros(capacity)
        self._size = 0
        self._head = 0

    def __len__(self) -> int:
        return self._size

    def push(self, transition: Transition) -> None:
        i = self._head
        self._obs[i] = transition.obs
        self._actions[i] = transition.action
        self._rewards[i] = transition.reward
        self._next_obs[i] = transition.next_obs
        self._bootstrap[i] = transition.bootstrap
        self._head = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        if batch_size > self._size:
            raise ValueError("not enough transitions to sample a batch")
        idx = rng.choice(self._size, size=batch_size, replace=False)
        return Batch(
            obs=self._obs[idx],
            actions=self._actions[idx],
            rewards=self._rewards[idx],
            next_obs=self._next_obs[idx],
            bootstrap=self._bootstrap[idx],
        )


# ============================================================================
# Shared update arithmetic
# ============================================================================

def soft_bellman_target(rewards: np.ndarray, bootstrap: np.ndarray,
                        discount: float, min_next_q: np.ndarray,
                        temperature: float,
                        next_log_prob: np.ndarray) -> np.ndarray:
    """y = r + gamma * bootstrap * (min_next_q - rho * log pi). With
    temperature 0 this is the plain min-twin bootstrap the baselines use."""
    return rewards + discount * bootstrap * (min_next_q - temperature * next_log_prob)


def regress_critic(net: DenseNet, optimizer: Adam, inputs: np.ndarray,
                   targets: np.ndarray) -> float:
    """One MSE step of a critic toward fixed targets; returns the pre-step
    loss. Targets are constants here: no gradient flows into whatever
    produced them."""
    pred, cache = net.forward(inputs)
    pred = pred.ravel()
    err = pred - targets
    loss = float(np.mean(err ** 2))
    if not math.isfinite(loss):
        raise TrainingDiverged(f"critic loss is {loss}")
    grads, _ = net.backward(cache, (2.0 / err.size) * err[:, None])
    optimizer.step(net.params, grads)
    return loss


QValueAndGrad = Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]


def policy_objective_step(policy: SquashedGaussianPolicy, optimizer: Adam,
                          obs: np.ndarray, noise: np.ndarray, temperature: float,
                          q_value_and_grad: QValueAndGrad) -> tuple[float, np.ndarray]:
    """One ascent step on E[Q(s, a~) - rho * log pi(a~|s)] with a~
    reparameterized-resampled. ``q_value_and_grad(obs, actions)`` supplies
    the critic values and their action gradients, which keeps this testable
    against analytic critics. Returns (loss, per-sample log probs)."""
    actions, log_probs, cache = policy.sample(obs, noise)
    q_values, dq_da = q_value_and_grad(obs, actions)
    loss = float(np.mean(temperature * log_probs - q_values))
    if not math.isfinite(loss):
        raise TrainingDiverged(f"policy loss is {loss}")
    batch = log_probs.shape[0]
    grads = policy.backward(
        cache,
        action_grad=-dq_da / batch,
        log_prob_grad=np.full(batch, temperature / batch),
    )
    optimizer.step(policy.params, grads)
    return loss, log_probs


def deterministic_policy_step(actor: TanhPolicy, optimizer: Adam,
                              obs: np.ndarray,
                              q_value_and_grad: QValueAndGrad) -> float:
    """One ascent step on E[Q(s, pi(s))] for a deterministic actor."""
    actions, cache = actor.forward(obs)
    q_values, dq_da = q_value_and_grad(obs, actions)
    loss = float(-np.mean(q_values))
    if not math.isfinite(loss):
        raise TrainingDiverged(f"actor loss is {loss}")
    grads = actor.backward(cache, -dq_da / actions.shape[0])
    optimizer.step(actor.params, grads)
    return loss


# ============================================================================
# Agents
# ============================================================================

class _OffPolicyAgent:
    """Machinery common to the three learners: buffer, warmup gating,
    critic regression, checkpointing."""

    algorithm = "base"

    def __init__(self, obs_dim: int, action_dim: int, config: AgentConfig,
                 seed: int | np.random.SeedSequence):
        self.obs_dim = obs_dim
        self.action_dim = action_dim
        self.config = config
        self._rng = np.random.default_rng(seed)
        self.buffer = ReplayBuffer(config.replay_capacity, obs_dim, action_dim)

    # -- subclass hooks ------------------------------------------------

    def _networks(self) -> dict[str, DenseNet]:
        raise NotImplementedError

    def _optimizers(self) -> dict[str, Adam]:
        raise NotImplementedError

    def _extra_arrays(self) -> dict[str, np.ndarray]:
        return {}

    def _update(self, batch: Batch) -> dict:
        raise NotImplementedError

    def act(self, obs: np.ndarray, explore: bool = True) -> np.ndarray:
        raise NotImplementedError

    # -- training loop -------------------------------------------------

    def train_step(self, transition: Transition) -> dict:
        """Store one transition and, past warmup, run the configured number
        of update rounds on fresh batches."""
        self.buffer.push(transition)
        if len(self.buffer) < max(self.config.warmup_transitions,
                                  self.config.batch_size):
            return {"updated": False}
        for _ in range(self.config.updates_per_step):
            batch = self.buffer.sample(self.config.batch_size, self._rng)
            diagnostics = self._update(batch)
        diagnostics["updated"] = True
        return diagnostics

    # -- checkpointing ---------------------------------------------------

    def save(self, directory, extra_manifest: dict | None = None) -> Path:
        """Write all networks, optimizer states, and agent scalars under
        ``directory`` plus a manifest recording the RNG state."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        payload: dict[str, np.ndarray] = {}
        for name, net in self._networks().items():
            payload[f"net.{name}.sizes"] = np.array(net.layer_sizes)
            for i, p in enumerate(net.params):
                payload[f"net.{name}.p{i}"] = p
        for name, opt in self._optimizers().items():
            payload[f"opt.{name}.t"] = np.array([opt.step_count])
            for i, arr in enumerate(opt.m):
                payload[f"opt.{name}.m{i}"] = arr
            for i, arr in enumerate(opt.v):
                payload[f"opt.{name}.v{i}"] = arr
        payload.update(self._extra_arrays())
        np.savez(directory / "agent.npz", **payload)
        manifest = {
            "format_version": AGENT_CHECKPOINT_VERSION,
            "algorithm": self.algorithm,
            "rng_state": self._rng.bit_generator.state,
        }
        if extra_manifest:
            manifest.update(extra_manifest)
        (directory / "manifest.json").write_text(json.dumps(manifest, indent=2))
        return directory

    def load(self, directory) -> None:
        """Restore a checkpoint written by save() into this agent (which must
        have been built with the same dimensions and config)."""
        directory = Path(directory)
        manifest = json.loads((directory / "manifest.json").read_text())
        if manifest["format_version"] != AGENT_CHECKPOINT_VERSION:
            raise ValueError("unsupported agent checkpoint version")
        if manifest["algorithm"] != self.algorithm:
            raise ValueError(
                f"checkpoint is for {manifest['algorithm']!r}, not {self.algorithm!r}")
        with np.load(directory / "agent.npz") as data:
            for name, net in self._networks().items():
                sizes = [int(s) for s in data[f"net.{name}.sizes"]]
                if sizes != net.layer_sizes:
                    raise ValueError(f"layer sizes differ for network {name!r}")
                for i, p in enumerate(net.params):
                    p[...] = data[f"net.{name}.p{i}"]
            for name, opt in self._optimizers().items():
                opt.step_count = int(data[f"opt.{name}.t"][0])
                for i in range(len(opt.m)):
                    opt.m[i][...] = data[f"opt.{name}.m{i}"]
                    opt.v[i][...] = data[f"opt.{name}.v{i}"]
            self._load_extra(data)
        self._rng.bit_generator.state = manifest["rng_state"]

    def _load_extra(self, data) -> None:
        pass


class MerlAgent(_OffPolicyAgent):
    """Maximum-entropy learner with twin critics and adaptive temperature."""

    algorithm = "merl"

    def __init__(self, obs_dim: int, action_dim: int, config: AgentConfig,
                 seed: int | np.random.SeedSequence):
        super().__init__(obs_dim, action_dim, config, seed)
        h = config.hidden_sizes
        self.policy = SquashedGaussianPolicy(obs_dim, action_dim, h, self._rng)
        self.q1 = DenseNet([obs_dim + action_dim, *h, 1], self._rng)
        self.q2 = DenseNet([obs_dim + action_dim, *h, 1], self._rng)
        self.target_q1 = self.q1.copy()
        self.target_q2 = self.q2.copy()
        self.log_temperature = np.array([math.log(config.initial_temperature)])
        self.target_entropy = (config.target_entropy
                               if config.target_entropy is not None
                               else -float(action_dim))
        lr = config.learning_rate
        self.policy_opt = Adam(self.policy.params, lr)
        self.q1_opt = Adam(self.q1.params, lr)
        self.q2_opt = Adam(self.q2.params, lr)
        self.temperature_opt = Adam([self.log_temperature], lr)

    @property
    def temperature(self) -> float:
        return float(np.exp(self.log_temperature[0]))

    def act(self, obs: np.ndarray, explore: bool = True) -> np.ndarray:
        if explore:
            noise = self._rng.standard_normal(self.action_dim)
            action, _, _ = self.policy.sample(obs, noise)
            return action
        return self.policy.mode(obs)

    def critic_target(self, batch: Batch, *, resample_noise: bool = True,
                      return_parts: bool = False):
        """Soft-Bellman targets with a freshly resampled next action. With
        ``resample_noise=False`` the next action is the policy mode, which
        (at temperature 0) reduces the target to the plain min-twin form."""
        b = batch.rewards.shape[0]
        if resample_noise:
            noise = self._rng.standard_normal((b, self.action_dim))
        else:
            noise = np.zeros((b, self.action_dim))
        next_actions, next_log_probs, _ = self.policy.sample(batch.next_obs, noise)
        sa = np.concatenate([batch.next_obs, next_actions], axis=1)
        q1t = self.target_q1.forward(sa)[0].ravel()
        q2t = self.target_q2.forward(sa)[0].ravel()
        min_q = np.minimum(q1t, q2t)
        y = soft_bellman_target(batch.rewards, batch.bootstrap,
                                self.config.discount, min_q,
                                self.temperature, next_log_probs)
        if return_parts:
            return y, q1t, q2t, next_log_probs
        return y

    def update_critics(self, batch: Batch) -> tuple[float, float]:
        y = self.critic_target(batch)
        sa = np.concatenate([batch.obs, batch.actions], axis=1)
        loss1 = regress_critic(self.q1, self.q1_opt, sa, y)
        loss2 = regress_critic(self.q2, self.q2_opt, sa, y)
        return loss1, loss2

    def _min_q_and_grad(self, obs: np.ndarray,
                        actions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Elementwise min of the online critics and its gradient w.r.t. the
        action inputs (only the argmin critic contributes per sample). Only
        input gradients are consumed; critic parameters stay untouched."""
        sa = np.concatenate([obs, actions], axis=1)
        v1, c1 = self.q1.forward(sa)
        v2, c2 = self.q2.forward(sa)
        v1 = v1.ravel()
        v2 = v2.ravel()
        pick1 = (v1 <= v2)[:, None].astype(float)
        _, in1 = self.q1.backward(c1, pick1)
        _, in2 = self.q2.backward(c2, 1.0 - pick1)
        dq_da = (in1 + in2)[:, self.obs_dim:]
        return np.minimum(v1, v2), dq_da

    def update_policy(self, batch: Batch) -> tuple[float, np.ndarray]:
        noise = self._rng.standard_normal((batch.obs.shape[0], self.action_dim))
        return policy_objective_step(self.policy, self.policy_opt, batch.obs,
                                     noise, self.temperature, self._min_q_and_grad)

    def update_temperature(self, batch: Batch) -> float:
        """One descent step on E[-rho * (log pi + target_entropy)] in log
        space, so the temperature stays positive by construction."""
        noise = self._rng.standard_normal((batch.obs.shape[0], self.action_dim))
        _, log_probs, _ = self.policy.sample(batch.obs, noise)
        return self._temperature_step(log_probs)

    def _temperature_step(self, log_probs: np.ndarray) -> float:
        grad = -self.temperature * float(np.mean(log_probs + self.target_entropy))
        self.temperature_opt.step([self.log_temperature], [np.array([grad])])
        return self.temperature

    def soft_update(self) -> None:
        soft_update_params(self.target_q1, self.q1, self.config.soft_update_rate)
        soft_update_params(self.target_q2, self.q2, self.config.soft_update_rate)

    def _update(self, batch: Batch) -> dict:
        loss1, loss2 = self.update_critics(batch)
        policy_loss, log_probs = self.update_policy(batch)
        # the temperature step reuses the policy update's resampled log probs
        temperature = self._temperature_step(log_probs)
        self.soft_update()
        return {
            "q1_loss": loss1,
            "q2_loss": loss2,
            "policy_loss": policy_loss,
            "temperature": temperature,
            "entropy": float(-np.mean(log_probs)),
        }

    def _networks(self) -> dict[str, DenseNet]:
        return {
            "policy": self.policy.trunk,
            "q1": self.q1,
            "q2": self.q2,
            "target_q1": self.target_q1,
            "target_q2": self.target_q2,
        }

    def _optimizers(self) -> dict[str, Adam]:
        return {
            "policy": self.policy_opt,
            "q1": self.q1_opt,
            "q2": self.q2_opt,
            "temperature": self.temperature_opt,
        }

    def _extra_arrays(self) -> dict[str, np.ndarray]:
        return {"log_temperature": self.log_temperature}

    def _load_extra(self, data) -> None:
        self.log_temperature[...] = data["log_temperature"]


class Td3Agent(_OffPolicyAgent):
    """Twin critics, target-policy smoothing, delayed actor updates."""

    algorithm = "td3"

    def __init__(self, obs_dim: int, action_dim: int, config: AgentConfig,
                 seed: int | np.random.SeedSequence):
        super().__init__(obs_dim, action_dim, config, seed)
        h = config.hidden_sizes
        self.actor = TanhPolicy(obs_dim, action_dim, h, self._rng)
        self.actor_target = self.actor.copy()
        self.q1 = DenseNet([obs_dim + action_dim, *h, 1], self._rng)
        self.q2 = DenseNet([obs_dim + action_dim, *h, 1], self._rng)
        self.target_q1 = self.q1.copy()
        self.target_q2 = self.q2.copy()
        lr = config.learning_rate
        self.actor_opt = Adam(self.actor.params, lr)
        self.q1_opt = Adam(self.q1.params, lr)
        self.q2_opt = Adam(self.q2.params, lr)
        self.update_count = 0

    def act(self, obs: np.ndarray, explore: bool = True) -> np.ndarray:
        action = self.actor.act(obs)
        if explore:
            action = action + self.config.exploration_noise * \
                self._rng.standard_normal(self.action_dim)
            action = np.clip(action, -1.0, 1.0)
        return action

    def critic_target(self, batch: Batch) -> np.ndarray:
        cfg = self.config
        next_actions = self.actor_target.act(batch.next_obs)
        noise = np.clip(
            cfg.target_policy_noise * self._rng.standard_normal(next_actions.shape),
            -cfg.target_noise_clip, cfg.target_noise_clip)
        next_actions = np.clip(next_actions + noise, -1.0, 1.0)
        sa = np.concatenate([batch.next_obs, next_actions], axis=1)
        min_q = np.minimum(self.target_q1.forward(sa)[0].ravel(),
                           self.target_q2.forward(sa)[0].ravel())
        return soft_bellman_target(batch.rewards, batch.bootstrap,
                                   cfg.discount, min_q, 0.0,
                                   np.zeros_like(min_q))

    def _q1_and_grad(self, obs: np.ndarray,
                     actions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        sa = np.concatenate([obs, actions], axis=1)
        v, cache = self.q1.forward(sa)
        _, in_grad = self.q1.backward(cache, np.ones((sa.shape[0], 1)))
        return v.ravel(), in_grad[:, self.obs_dim:]

    def _update(self, batch: Batch) -> dict:
        y = self.critic_target(batch)
        sa = np.concatenate([batch.obs, batch.actions], axis=1)
        loss1 = regress_critic(self.q1, self.q1_opt, sa, y)
        loss2 = regress_critic(self.q2, self.q2_opt, sa, y)
        self.update_count += 1
        diagnostics = {"q1_loss": loss1, "q2_loss": loss2}
        if self.update_count % self.config.policy_delay == 0:
            diagnostics["policy_loss"] = deterministic_policy_step(
                self.actor, self.actor_opt, batch.obs, self._q1_and_grad)
            rate = self.config.soft_update_rate
            soft_update_params(self.actor_target.trunk, self.actor.trunk, rate)
            soft_update_params(self.target_q1, self.q1, rate)
            soft_update_params(self.target_q2, self.q2, rate)
        return diagnostics

    def _networks(self) -> dict[str, DenseNet]:
        return {
            "actor": self.actor.trunk,
            "actor_target": self.actor_target.trunk,
            "q1": self.q1,
            "q2": self.q2,
            "target_q1": self.target_q1,
            "target_q2": self.target_q2,
        }

    def _optimizers(self) -> dict[str, Adam]:
        return {"actor": self.actor_opt, "q1": self.q1_opt, "q2": self.q2_opt}

    def _extra_arrays(self) -> dict[str, np.ndarray]:
        return {"update_count": np.array([self.update_count])}

    def _load_extra(self, data) -> None:
        self.update_count = int(data["update_count"][0])


class DdpgAgent(_OffPolicyAgent):
    """Single critic, deterministic actor, every-step updates."""

    algorithm = "ddpg"

    def __init__(self, obs_dim: int, action_dim: int, config: AgentConfig,
                 seed: int | np.random.SeedSequence):
        super().__init__(obs_dim, action_dim, config, seed)
        h = config.hidden_sizes
        self.actor = TanhPolicy(obs_dim, action_dim, h, self._rng)
        self.actor_target = self.actor.copy()
        self.q1 = DenseNet([obs_dim + action_dim, *h, 1], self._rng)
        self.target_q1 = self.q1.copy()
        lr = config.learning_rate
        self.actor_opt = Adam(self.actor.params, lr)
        self.q1_opt = Adam(self.q1.params, lr)

    def act(self, obs: np.ndarray, explore: bool = True) -> np.ndarray:
        action = self.actor.act(obs)
        if explore:
            action = action + self.config.exploration_noise * \
                self._rng.standard_normal(self.action_dim)
            action = np.clip(action, -1.0, 1.0)
        return action

    def critic_target(self, batch: Batch) -> np.ndarray:
        next_actions = self.actor_target.act(batch.next_obs)
        sa = np.concatenate([batch.next_obs, next_actions], axis=1)
        q = self.target_q1.forward(sa)[0].ravel()
        return soft_bellman_target(batch.rewards, batch.bootstrap,
                                   self.config.discount, q, 0.0,
                                   np.zeros_like(q))

    def _q1_and_grad(self, obs: np.ndarray,
                     actions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        sa = np.concatenate([obs, actions], axis=1)
        v, cache = self.q1.forward(sa)
        _, in_grad = self.q1.backward(cache, np.ones((sa.shape[0], 1)))
        return v.ravel(), in_grad[:, self.obs_dim:]

    def _update(self, batch: Batch) -> dict:
        y = self.critic_target(batch)
        sa = np.concatenate([batch.obs, batch.actions], axis=1)
        loss1 = regress_critic(self.q1, self.q1_opt, sa, y)
        policy_loss = deterministic_policy_step(
            self.actor, self.actor_opt, batch.obs, self._q1_and_grad)
        rate = self.config.soft_update_rate
        soft_update_params(self.actor_target.trunk, self.actor.trunk, rate)
        soft_update_params(self.target_q1, self.q1, rate)
        return {"q1_loss": loss1, "policy_loss": policy_loss}

    def _networks(self) -> dict[str, DenseNet]:
        return {
            "actor": self.actor.trunk,
            "actor_target": self.actor_target.trunk,
            "q1": self.q1,
            "target_q1": self.target_q1,
        }

    def _optimizers(self) -> dict[str, Adam]:
        return {"actor": self.actor_opt, "q1": self.q1_opt}


class RandomAgent:
    """Uniform actions in [-1, 1]^dim; never learns. Keeps the act /
    train_step / save interface of the learners."""

    algorithm = "random"

    def __init__(self, obs_dim: int, action_dim: int, config: AgentConfig,
                 seed: int | np.random.SeedSequence):
        self.obs_dim = obs_dim
        self.action_dim = action_dim
        self.config = config
        self._rng = np.random.default_rng(seed)

    def act(self, obs: np.ndarray, explore: bool = True) -> np.ndarray:
        return self._rng.uniform(-1.0, 1.0, self.action_dim)

    def train_step(self, transition: Transition) -> dict:
        return {"updated": False}

    def save(self, directory, extra_manifest: dict | None = None) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        manifest = {
            "format_version": AGENT_CHECKPOINT_VERSION,
            "algorithm": self.algorithm,
            "rng_state": self._rng.bit_generator.state,
        }
        if extra_manifest:
            manifest.update(extra_manifest)
        (directory / "manifest.json").write_text(json.dumps(manifest, indent=2))
        return directory

    def load(self, directory) -> None:
        manifest = json.loads((Path(directory) / "manifest.json").read_text())
        if manifest["algorithm"] != self.algorithm:
            raise ValueError("checkpoint is not for a random agent")
        self._rng.bit_generator.state = manifest["rng_state"]


ALGORITHMS = ("merl", "td3", "ddpg", "random")

_AGENT_CLASSES = {
    "merl": MerlAgent,
    "td3": Td3Agent,
    "ddpg": DdpgAgent,
    "random": RandomAgent,
}


def make_agent(algorithm: str, obs_dim: int, action_dim: int,
               config: AgentConfig, seed: int | np.random.SeedSequence):
    try:
        cls = _AGENT_CLASSES[algorithm]
    except KeyError:
        raise ValueError(f"unknown algorithm {algorithm!r}; "
                         f"expected one of {ALGORITHMS}") from None
    return cls(obs_dim, action_dim, config, seed)
