"""Sequential-decision environment for joint antenna-position / power control.

State: antenna layout, user and target positions, remaining energy, slot
index. Action: antenna displacements and per-user transmit powers (plus user
displacements and a slot energy draw in ``paper-literal`` mobility mode).
Reward per slot:

    max_m R_m  +  beta * mean_k (Gamma_k - Gamma_th)

with the SNR term compared in dB by default (configurable to linear). The
projection layer maps raw agent outputs in [-1, 1]^dim onto actions that
satisfy the power box and antenna-spacing constraints by construction; the
energy budget is enforced by scaling a slot's powers down so the draw never
exceeds what is left.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .physics import (
    AntennaLayout,
    CarrierConfig,
    Position3D,
    WaveguideConfig,
    db_to_linear,
    dbm_to_watts,
    linear_to_db,
    sensing_snr,
    spacing_satisfied,
    user_rate,
)

MOBILITY_MODES = ("env", "paper-literal")
SNR_PENALTY_DOMAINS = ("db", "linear")


@dataclass(frozen=True)
class SystemConfig:
    """Scenario parameters: population sizes, horizon, budgets, thresholds,
    deployment geometry, and the nested carrier/waveguide configs."""

    num_antennas: int
    num_users: int
    num_targets: int
    slots_per_episode: int
    slot_duration_s: float
    energy_budget_j: float
    max_user_power_w: float
    snr_threshold_linear: float
    reward_weight: float
    area_side_m: float
    max_antenna_step_m: float
    max_user_step_m: float
    carrier: CarrierConfig
    waveguide: WaveguideConfig
    mobility_mode: str = "env"
    snr_penalty_domain: str = "db"

    def __post_init__(self):
        positive = {
            "num_antennas": self.num_antennas,
            "num_users": self.num_users,
            "slots_per_episode": self.slots_per_episode,
            "slot_duration_s": self.slot_duration_s,
            "energy_budget_j": self.energy_budget_j,
            "max_user_power_w": self.max_user_power_w,
            "snr_threshold_linear": self.snr_threshold_linear,
            "area_side_m": self.area_side_m,
            "max_antenna_step_m": self.max_antenna_step_m,
            "max_user_step_m": self.max_user_step_m,
        }
        for name, value in positive.items():
            if value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")
        if self.num_targets < 0:
            raise ValueError("num_targets must be >= 0")
        if self.reward_weight < 0:
            raise ValueError("reward_weight must be >= 0")
        if self.mobility_mode not in MOBILITY_MODES:
            raise ValueError(f"mobility_mode must be one of {MOBILITY_MODES}")
        if self.snr_penalty_domain not in SNR_PENALTY_DOMAINS:
            raise ValueError(f"snr_penalty_domain must be one of {SNR_PENALTY_DOMAINS}")
        extent = self.waveguide.x_max_m - self.waveguide.x_min_m
        needed = (self.num_antennas - 1) * self.waveguide.min_spacing_m
        if extent < needed:
            raise ValueError(
                f"waveguide extent {extent} m cannot hold {self.num_antennas} "
                f"antennas at spacing {self.waveguide.min_spacing_m} m")
        half = self.area_side_m / 2.0
        if self.waveguide.x_min_m < -half or self.waveguide.x_max_m > half:
            raise ValueError("waveguide extent must lie within the deployment square")

    @property
    def half_side_m(self) -> float:
        return self.area_side_m / 2.0

    @property
    def snr_threshold_db(self) -> float:
        return linear_to_db(self.snr_threshold_linear)


def default_system_config(**overrides) -> SystemConfig:
    """The shipped default scenario: 28 GHz carrier, -90 dBm noise, guide
    height 3 m, n_eff 1.4, spacing lambda/2, N=3 antennas, M=6 users, K=1
    target, T=100 slots, 10 dB sensing threshold, 150 m square. The budget
    terms (0.5 W power cap, 180 J energy, 1 s slots) and the reward weight
    0.1 are artifact defaults, not published values."""
    carrier = CarrierConfig(carrier_frequency_hz=28e9,
                            noise_power_w=dbm_to_watts(-90.0))
    waveguide = WaveguideConfig.from_carrier(
        carrier,
        height_m=3.0,
        effective_refractive_index=1.4,
        min_spacing_m=carrier.wavelength_m / 2.0,
        x_min_m=-75.0,
        x_max_m=75.0,
    )
    defaults = dict(
        num_antennas=3,
        num_users=6,
        num_targets=1,
        slots_per_episode=100,
        slot_duration_s=1.0,
        energy_budget_j=180.0,
        max_user_power_w=0.5,
        snr_threshold_linear=db_to_linear(10.0),
        reward_weight=0.1,
        area_side_m=150.0,
        max_antenna_step_m=5.0,
        max_user_step_m=1.0,
        carrier=carrier,
        waveguide=waveguide,
        mobility_mode="env",
        snr_penalty_domain="db",
    )
    defaults.update(overrides)
    return SystemConfig(**defaults)


@dataclass(eq=False)
class EnvState:
    """Snapshot of the decision process at the start of a slot."""

    antenna_layout: AntennaLayout
    user_positions: tuple[Position3D, ...]
    target_positions: tuple[Position3D, ...]
    remaining_energy_j: float
    slot_index: int


@dataclass(eq=False)
class EnvAction:
    """A feasible action: antenna displacements (meters) and per-user powers
    (watts, already inside [0, P_max]). ``user_deltas`` and ``slot_energy_j``
    are populated only in paper-literal mobility mode. The two flags record
    what the projection had to do, for step diagnostics."""

    antenna_deltas: np.ndarray
    user_powers_w: np.ndarray
    user_deltas: np.ndarray | None = None
    slot_energy_j: float | None = None
    spacing_projected: bool = False
    power_reconciled: bool = False


@dataclass(eq=False)
class ConstraintReport:
    """What constraint machinery engaged during a step."""

    spacing_projected: bool
    power_clipped: bool
    energy_exhausted: bool
    snr_violation_margin_db: float


@dataclass(eq=False)
class StepOutcome:
    """Reward plus everything diagnostics need about the slot."""

    reward: float
    next_state: EnvState
    done: bool
    served_user_index: int
    per_user_rates: np.ndarray
    sum_rate: float
    per_target_snr_linear: np.ndarray
    user_powers_w: np.ndarray
    energy_drawn_j: float
    constraint_report: ConstraintReport


# SNR floor for the dB-domain penalty: anything at or below 0 dB counts as
# 0 dB, so a zero-power slot is penalized by exactly beta * Gamma_th_dB
# instead of diverging to -inf.
_DB_PENALTY_FLOOR_LINEAR = 1.0

# Floor only used for the *diagnostic* margin, to keep log10 finite.
_DIAGNOSTIC_SNR_FLOOR = 1e-300


def snr_margin(snr_linear: float, config: SystemConfig) -> float:
    """Signed sensing margin Gamma - Gamma_th in the configured penalty
    domain (dB by default, with sub-0-dB SNRs floored at 0 dB)."""
    if config.snr_penalty_domain == "db":
        floored = max(snr_linear, _DB_PENALTY_FLOOR_LINEAR)
        return linear_to_db(floored) - config.snr_threshold_db
    return snr_linear - config.snr_threshold_linear


def _step_up(prev: float, delta: float) -> float:
    """Smallest float >= prev + delta whose gap from prev is truly >= delta."""
    x = prev + delta
    while x - prev < delta:
        x = math.nextafter(x, math.inf)
    return x


def _step_down(nxt: float, delta: float) -> float:
    """Largest float <= nxt - delta whose gap to nxt is truly >= delta."""
    x = nxt - delta
    while nxt - x < delta:
        x = math.nextafter(x, -math.inf)
    return x


def project_layout(xs: np.ndarray, waveguide: WaveguideConfig) -> np.ndarray:
    """Project proposed antenna x-coordinates onto the feasible set.

    Sort ascending, sweep left-to-right opening each gap to >= delta, shift
    everything back so the mean is preserved, then clamp to the waveguide
    extent (left edge with a forward sweep, right edge with a backward
    sweep). Feasible inputs come back unchanged. Assumes the extent can hold
    the antennas at minimum spacing, which SystemConfig validates.
    """
    delta = waveguide.min_spacing_m
    out = np.sort(np.asarray(xs, dtype=float))
    pre_mean = out.mean()
    for i in range(1, out.size):
        if out[i] - out[i - 1] < delta:
            out[i] = _step_up(out[i - 1], delta)
    out += pre_mean - out.mean()
    # mean shift re-rounds each coordinate; re-open any gap it closed
    if out[0] < waveguide.x_min_m:
        out[0] = waveguide.x_min_m
    for i in range(1, out.size):
        if out[i] - out[i - 1] < delta:
            out[i] = _step_up(out[i - 1], delta)
    if out[-1] > waveguide.x_max_m:
        out[-1] = waveguide.x_max_m
    for i in range(out.size - 2, -1, -1):
        if out[i + 1] - out[i] < delta:
            out[i] = _step_down(out[i + 1], delta)
    return out


class EpisodeFinished(RuntimeError):
    """Raised when step() is called after the episode ended."""


class PinchingIsacEnv:
    """Single-owner environment instance; all randomness flows through the
    per-instance generator seeded at construction (or reset)."""

    def __init__(self, config: SystemConfig, seed: int | np.random.SeedSequence):
        self.config = config
        self._initial_seed = seed
        self._rng = np.random.default_rng(seed)
        self._state: EnvState | None = None
        self._done = True

    # ------------------------------------------------------------------
    # dimensions
    # ------------------------------------------------------------------

    @property
    def action_dim(self) -> int:
        cfg = self.config
        if cfg.mobility_mode == "paper-literal":
            return cfg.num_antennas + 2 * cfg.num_users + cfg.num_users + 1
        return cfg.num_antennas + cfg.num_users

    @property
    def observation_dim(self) -> int:
        cfg = self.config
        return (cfg.num_antennas + 2 * cfg.num_users + 2 * cfg.num_targets
                + cfg.num_users + cfg.num_users + cfg.num_targets + 2)

    @property
    def state(self) -> EnvState:
        if self._state is None:
            raise RuntimeError("environment has not been reset")
        return self._state

    # ------------------------------------------------------------------
    # reset / step
    # ------------------------------------------------------------------

    def reset(self, seed: int | np.random.SeedSequence | None = None) -> EnvState:
        """Start a fresh episode: users/targets uniform in the square,
        antennas evenly spaced over the waveguide, full energy budget.

        Passing a seed restarts the instance's random stream, making the
        state (and everything that follows) a pure function of
        (config, seed, actions)."""
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        cfg = self.config
        half = cfg.half_side_m
        users = tuple(
            Position3D(self._rng.uniform(-half, half),
                       self._rng.uniform(-half, half), 0.0)
            for _ in range(cfg.num_users))
        targets = tuple(
            Position3D(self._rng.uniform(-half, half),
                       self._rng.uniform(-half, half), 0.0)
            for _ in range(cfg.num_targets))
        if cfg.num_antennas == 1:
            xs = ((cfg.waveguide.x_min_m + cfg.waveguide.x_max_m) / 2.0,)
        else:
            xs = tuple(np.linspace(cfg.waveguide.x_min_m, cfg.waveguide.x_max_m,
                                   cfg.num_antennas))
        self._state = EnvState(
            antenna_layout=AntennaLayout(xs),
            user_positions=users,
            target_positions=targets,
            remaining_energy_j=cfg.energy_budget_j,
            slot_index=0,
        )
        self._done = False
        return self._state

    def project_action(self, raw: np.ndarray) -> EnvAction:
        """Map a raw vector in [-1,1]^action_dim to a feasible EnvAction.

        Antenna components scale to displacements of at most
        max_antenna_step; power components map affinely onto [0, P_max];
        the displaced layout goes through the spacing projection. In
        paper-literal mode the extra components carry user displacements and
        a slot energy target that the powers are rescaled to match.
        """
        cfg = self.config
        state = self.state
        raw = np.clip(np.asarray(raw, dtype=float), -1.0, 1.0)
        if raw.shape != (self.action_dim,):
            raise ValueError(f"raw action must have shape ({self.action_dim},)")

        n, m = cfg.num_antennas, cfg.num_users
        deltas = raw[:n] * cfg.max_antenna_step_m
        proposed = np.asarray(state.antenna_layout.xs) + deltas
        projected = project_layout(proposed, cfg.waveguide)
        spacing_projected = bool(np.max(np.abs(projected - proposed)) > 1e-12)
        final_deltas = projected - np.asarray(state.antenna_layout.xs)

        user_deltas = None
        slot_energy = None
        reconciled = False
        if cfg.mobility_mode == "paper-literal":
            user_deltas = (raw[n:n + 2 * m].reshape(m, 2) * cfg.max_user_step_m)
            powers = (raw[n + 2 * m:n + 3 * m] + 1.0) * 0.5 * cfg.max_user_power_w
            max_slot_energy = m * cfg.max_user_power_w * cfg.slot_duration_s
            slot_energy = (raw[-1] + 1.0) * 0.5 * max_slot_energy
            requested = powers.sum() * cfg.slot_duration_s
            if requested > 0.0:
                scale = slot_energy / requested
                scaled = np.clip(powers * scale, 0.0, cfg.max_user_power_w)
                reconciled = bool(np.max(np.abs(scaled - powers)) > 0.0)
                powers = scaled
        else:
            powers = (raw[n:] + 1.0) * 0.5 * cfg.max_user_power_w

        return EnvAction(
            antenna_deltas=final_deltas,
            user_powers_w=powers,
            user_deltas=user_deltas,
            slot_energy_j=slot_energy,
            spacing_projected=spacing_projected,
            power_reconciled=reconciled,
        )

    def step(self, action: EnvAction) -> StepOutcome:
        """Advance one slot: move antennas and users, draw energy, compute
        all per-user rates and per-target sensing SNRs, and assemble the
        reward. The served user rotates round-robin with the slot index."""
        if self._state is None:
            raise RuntimeError("environment has not been reset")
        if self._done:
            raise EpisodeFinished("episode already finished; call reset()")
        cfg = self.config
        state = self._state
        t = state.slot_index
        served = t % cfg.num_users

        # re-project after applying the deltas: adding a delta back to the
        # coordinate it was derived from can drift by an ulp, and feasibility
        # of every reachable layout is a hard invariant
        new_xs = project_layout(
            np.asarray(state.antenna_layout.xs) + action.antenna_deltas,
            cfg.waveguide)
        new_layout = AntennaLayout(tuple(new_xs))

        new_users = self._move_users(state.user_positions, action)

        powers = np.clip(np.asarray(action.user_powers_w, dtype=float),
                         0.0, cfg.max_user_power_w)
        requested = powers.sum() * cfg.slot_duration_s
        power_clipped = action.power_reconciled
        if requested > state.remaining_energy_j:
            scale = state.remaining_energy_j / requested
            powers = powers * scale
            drawn = state.remaining_energy_j
            remaining = 0.0
            power_clipped = True
        else:
            drawn = requested
            remaining = state.remaining_energy_j - requested
            if remaining <= 0.0:
                remaining = 0.0
        energy_exhausted = remaining == 0.0

        rates = np.array([
            user_rate(new_users[i], new_layout, powers[i], cfg.num_users,
                      cfg.waveguide, cfg.carrier)
            for i in range(cfg.num_users)
        ])
        snrs = np.array([
            sensing_snr(target, new_users[served], new_layout, powers[served],
                        cfg.waveguide, cfg.carrier)
            for target in state.target_positions
        ])

        max_rate = float(rates.max())
        if snrs.size:
            penalty = float(np.mean([snr_margin(s, cfg) for s in snrs]))
            violation_margin = min(
                linear_to_db(max(s, _DIAGNOSTIC_SNR_FLOOR)) - cfg.snr_threshold_db
                for s in snrs)
        else:
            penalty = 0.0
            violation_margin = math.inf
        reward = max_rate + cfg.reward_weight * penalty

        next_state = EnvState(
            antenna_layout=new_layout,
            user_positions=new_users,
            target_positions=state.target_positions,
            remaining_energy_j=remaining,
            slot_index=t + 1,
        )
        done = (t + 1 == cfg.slots_per_episode) or energy_exhausted
        self._state = next_state
        self._done = done
        return StepOutcome(
            reward=reward,
            next_state=next_state,
            done=done,
            served_user_index=served,
            per_user_rates=rates,
            sum_rate=float(rates.sum()),
            per_target_snr_linear=snrs,
            user_powers_w=powers,
            energy_drawn_j=drawn,
            constraint_report=ConstraintReport(
                spacing_projected=action.spacing_projected,
                power_clipped=power_clipped,
                energy_exhausted=energy_exhausted,
                snr_violation_margin_db=violation_margin,
            ),
        )

    def _move_users(self, users: tuple[Position3D, ...],
                    action: EnvAction) -> tuple[Position3D, ...]:
        cfg = self.config
        half = cfg.half_side_m
        if cfg.mobility_mode == "paper-literal":
            deltas = action.user_deltas
            if deltas is None:
                deltas = np.zeros((cfg.num_users, 2))
            deltas = np.clip(deltas, -cfg.max_user_step_m, cfg.max_user_step_m)
        else:
            # random walk: displacement uniform in a disc of the step radius
            radius = cfg.max_user_step_m * np.sqrt(self._rng.random(cfg.num_users))
            angle = self._rng.random(cfg.num_users) * 2.0 * np.pi
            deltas = np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=1)
        moved = []
        for pos, (dx, dy) in zip(users, deltas):
            moved.append(Position3D(
                min(max(pos.x + dx, -half), half),
                min(max(pos.y + dy, -half), half),
                0.0))
        return tuple(moved)

    # ------------------------------------------------------------------
    # observation encoding
    # ------------------------------------------------------------------

    def flatten_state(self, state: EnvState | None = None) -> np.ndarray:
        """Encode a state as a float vector in [-1, 1].

        Layout (fixed):
          - N antenna x / (side/2)
          - per user x, y / (side/2)
          - per target x, y / (side/2)
          - one-hot of the user the round-robin schedule serves this slot
            (redundant with the slot index, but a small net cannot recover
            a modulus from a scalar, and the sensing term hinges on it)
          - per user, then per target: log-scale incoherent channel quality,
            log10(sum_n 1/dist_n^2) affinely squashed into [-1, 1] (the
            fine-scale interference pattern is chaotic in the antenna
            coordinates; this envelope is the learnable part of the gain)
          - remaining energy / budget
          - slot index / horizon
        """
        s = self.state if state is None else state
        cfg = self.config
        half = cfg.half_side_m
        parts = [np.asarray(s.antenna_layout.xs) / half]
        parts.append(np.array([[p.x / half, p.y / half] for p in s.user_positions]).ravel())
        if s.target_positions:
            parts.append(np.array(
                [[p.x / half, p.y / half] for p in s.target_positions]).ravel())
        served = np.zeros(cfg.num_users)
        served[s.slot_index % cfg.num_users] = 1.0
        parts.append(served)
        parts.append(self._channel_quality(s))
        parts.append(np.array([
            s.remaining_energy_j / cfg.energy_budget_j,
            s.slot_index / cfg.slots_per_episode,
        ]))
        return np.concatenate(parts)

    def _channel_quality(self, s: EnvState) -> np.ndarray:
        """log10(sum_n 1/dist_n^2) per user and target, squashed to [-1, 1]."""
        cfg = self.config
        xs = np.asarray(s.antenna_layout.xs)
        height = cfg.waveguide.height_m
        out = np.empty(cfg.num_users + cfg.num_targets)
        points = list(s.user_positions) + list(s.target_positions)
        for i, p in enumerate(points):
            dist_sq = (xs - p.x) ** 2 + p.y ** 2 + height * height
            out[i] = np.log10(np.sum(1.0 / dist_sq))
        # dist in [height, ~1.5*side]: log10 spans roughly [-4.6, -0.5]
        return np.clip((out + 2.5) / 2.5, -1.0, 1.0)

    def unflatten_state(self, vec: np.ndarray) -> EnvState:
        """Inverse of flatten_state (up to float scaling). The derived
        components (served-user one-hot, channel quality) are ignored."""
        cfg = self.config
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (self.observation_dim,):
            raise ValueError(f"observation must have shape ({self.observation_dim},)")
        half = cfg.half_side_m
        n, m, k = cfg.num_antennas, cfg.num_users, cfg.num_targets
        xs = tuple(vec[:n] * half)
        users = tuple(
            Position3D(vec[n + 2 * i] * half, vec[n + 2 * i + 1] * half, 0.0)
            for i in range(m))
        base = n + 2 * m
        targets = tuple(
            Position3D(vec[base + 2 * i] * half, vec[base + 2 * i + 1] * half, 0.0)
            for i in range(k))
        energy = vec[-2] * cfg.energy_budget_j
        slot = int(round(vec[-1] * cfg.slots_per_episode))
        return EnvState(AntennaLayout(xs), users, targets, energy, slot)
