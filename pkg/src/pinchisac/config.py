"""Experiment configuration: strict, sectioned key-value files.

The format is INI-style with explicit units in key names
(``noise_power_dbm``, ``slot_duration_s``). Every key has a shipped default;
unknown sections or keys are hard errors, because silent typos are the main
failure mode of experiment configs. All dB/dBm values are converted to
linear scale here, once, at parse time.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import os
from dataclasses import dataclass, field

from .agents import ALGORITHMS, AgentConfig
from .env import (
    MOBILITY_MODES,
    SNR_PENALTY_DOMAINS,
    SystemConfig,
)
from .physics import CarrierConfig, WaveguideConfig, db_to_linear, dbm_to_watts

OUT_DIR_ENV_VAR = "PINCHISAC_OUT_DIR"


class ConfigError(Exception):
    """Invalid configuration file, key, or value."""


def _parse_float(text: str) -> float:
    return float(text)


def _parse_int(text: str) -> int:
    value = int(text)
    return value


def _parse_str(text: str) -> str:
    return text.strip()


def _parse_float_list(text: str) -> tuple[float, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(float(tok) for tok in text.split(","))


def _parse_int_list(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(int(tok) for tok in text.split(","))


def _parse_str_list(text: str) -> tuple[str, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(tok.strip() for tok in text.split(","))


# (parser, default-as-string) per section.key; this is the whole schema
_SCHEMA: dict[str, dict[str, tuple]] = {
    "system": {
        "num_antennas": (_parse_int, "3"),
        "num_users": (_parse_int, "6"),
        "num_targets": (_parse_int, "1"),
        "slots_per_episode": (_parse_int, "100"),
        "slot_duration_s": (_parse_float, "1.0"),
        "energy_budget_j": (_parse_float, "180.0"),
        "max_user_power_w": (_parse_float, "0.5"),
        "snr_threshold_db": (_parse_float, "10.0"),
        "reward_weight": (_parse_float, "0.1"),
        "snr_penalty_domain": (_parse_str, "db"),
        "area_side_m": (_parse_float, "150.0"),
        "max_antenna_step_m": (_parse_float, "5.0"),
        "max_user_step_m": (_parse_float, "1.0"),
        "mobility_mode": (_parse_str, "env"),
    },
    "carrier": {
        "carrier_frequency_hz": (_parse_float, "28e9"),
        "noise_power_dbm": (_parse_float, "-90.0"),
    },
    "waveguide": {
        "height_m": (_parse_float, "3.0"),
        "effective_refractive_index": (_parse_float, "1.4"),
        "min_spacing_wavelengths": (_parse_float, "0.5"),
        "x_min_m": (_parse_float, "-75.0"),
        "x_max_m": (_parse_float, "75.0"),
        "feed_x_m": (_parse_float, "-75.0"),
    },
    "training": {
        "algorithms": (_parse_str_list, "merl,td3,ddpg,random"),
        "learning_rate": (_parse_float, "3e-4"),
        "learning_rate_sweep": (_parse_float_list, ""),
        "episodes": (_parse_int, "500"),
        "seeds": (_parse_int_list, "0,1,2"),
        "eval_every_episodes": (_parse_int, "10"),
        "eval_episodes": (_parse_int, "3"),
        "hidden_sizes": (_parse_int_list, "128,128"),
        "batch_size": (_parse_int, "256"),
        "replay_capacity": (_parse_int, "100000"),
        "warmup_transitions": (_parse_int, "1000"),
        "updates_per_step": (_parse_int, "3"),
        "discount": (_parse_float, "0.97"),
        "soft_update_rate": (_parse_float, "0.01"),
        "initial_temperature": (_parse_float, "0.1"),
        "exploration_noise": (_parse_float, "0.1"),
        "target_policy_noise": (_parse_float, "0.2"),
        "target_noise_clip": (_parse_float, "0.5"),
        "policy_delay": (_parse_int, "2"),
    },
    "output": {
        "out_dir": (_parse_str, "runs"),
        "moving_average_window": (_parse_int, "20"),
    },
}

# sections whose values determine run content; [output] location does not
_HASHED_SECTIONS = ("system", "carrier", "waveguide", "training")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a campaign needs, already validated and in linear units."""

    system: SystemConfig
    agent: AgentConfig
    algorithms: tuple[str, ...]
    learning_rate: float
    learning_rate_sweep: tuple[float, ...]
    episodes: int
    seeds: tuple[int, ...]
    eval_every_episodes: int
    eval_episodes: int
    out_dir: str
    moving_average_window: int
    resolved: dict = field(compare=False, repr=False, default_factory=dict)

    def config_hash(self) -> str:
        """Stable digest of the run-content sections of the raw config."""
        subset = {k: v for k, v in self.resolved.items()
                  if k.split(".", 1)[0] in _HASHED_SECTIONS}
        canon = json.dumps(subset, sort_keys=True)
        return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _read_file(path) -> dict[str, str]:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    values: dict[str, str] = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key, value in parser[section].items():
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            values[f"{section}.{key}"] = value
    return values


def load_experiment_config(path=None,
                           overrides: dict[str, str] | None = None) -> ExperimentConfig:
    """Resolve defaults <- file <- overrides (keys ``section.key``) into a
    validated ExperimentConfig. The PINCHISAC_OUT_DIR environment variable,
    when set, overrides the output directory (and nothing else)."""
    resolved = {f"{section}.{key}": default
                for section, keys in _SCHEMA.items()
                for key, (_, default) in keys.items()}
    if path is not None:
        resolved.update(_read_file(path))
    for key, value in (overrides or {}).items():
        if key not in resolved:
            raise ConfigError(f"unknown config override {key!r}")
        resolved[key] = str(value)
    env_out = os.environ.get(OUT_DIR_ENV_VAR)
    if env_out:
        resolved["output.out_dir"] = env_out

    typed: dict[str, object] = {}
    for key, text in resolved.items():
        section, name = key.split(".", 1)
        caster = _SCHEMA[section][name][0]
        try:
            typed[key] = caster(text)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {text!r} ({exc})") from None

    try:
        system = _build_system(typed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    algorithms = typed["training.algorithms"]
    if not algorithms:
        raise ConfigError("at least one algorithm is required")
    for algo in algorithms:
        if algo not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {algo!r}; expected one of {ALGORITHMS}")
    seeds = typed["training.seeds"]
    if not seeds:
        raise ConfigError("at least one seed is required")
    if len(set(seeds)) != len(seeds):
        raise ConfigError("seeds must be distinct")
    for key in ("training.learning_rate", "training.discount",
                "training.soft_update_rate", "training.initial_temperature"):
        if typed[key] <= 0:
            raise ConfigError(f"{key} must be positive")
    if typed["training.discount"] >= 1.0:
        raise ConfigError("training.discount must be < 1")
    for key in ("training.episodes", "training.eval_every_episodes",
                "training.eval_episodes", "training.batch_size",
                "training.replay_capacity", "training.warmup_transitions",
                "training.updates_per_step", "training.policy_delay",
                "output.moving_average_window"):
        if typed[key] < 1:
            raise ConfigError(f"{key} must be >= 1")
    if any(lr <= 0 for lr in typed["training.learning_rate_sweep"]):
        raise ConfigError("learning_rate_sweep entries must be positive")
    hidden = typed["training.hidden_sizes"]
    if not hidden or any(h < 1 for h in hidden):
        raise ConfigError("hidden_sizes must be a list of positive ints")
    if typed["system.mobility_mode"] not in MOBILITY_MODES:
        raise ConfigError(f"mobility_mode must be one of {MOBILITY_MODES}")
    if typed["system.snr_penalty_domain"] not in SNR_PENALTY_DOMAINS:
        raise ConfigError(f"snr_penalty_domain must be one of {SNR_PENALTY_DOMAINS}")

    agent = AgentConfig(
        hidden_sizes=tuple(hidden),
        learning_rate=typed["training.learning_rate"],
        discount=typed["training.discount"],
        soft_update_rate=typed["training.soft_update_rate"],
        batch_size=typed["training.batch_size"],
        replay_capacity=typed["training.replay_capacity"],
        warmup_transitions=typed["training.warmup_transitions"],
        updates_per_step=typed["training.updates_per_step"],
        initial_temperature=typed["training.initial_temperature"],
        exploration_noise=typed["training.exploration_noise"],
        target_policy_noise=typed["training.target_policy_noise"],
        target_noise_clip=typed["training.target_noise_clip"],
        policy_delay=typed["training.policy_delay"],
    )
    return ExperimentConfig(
        system=system,
        agent=agent,
        algorithms=tuple(algorithms),
        learning_rate=typed["training.learning_rate"],
        learning_rate_sweep=tuple(typed["training.learning_rate_sweep"]),
        episodes=typed["training.episodes"],
        seeds=tuple(seeds),
        eval_every_episodes=typed["training.eval_every_episodes"],
        eval_episodes=typed["training.eval_episodes"],
        out_dir=typed["output.out_dir"],
        moving_average_window=typed["output.moving_average_window"],
        resolved=resolved,
    )


def _build_system(typed: dict) -> SystemConfig:
    carrier = CarrierConfig(
        carrier_frequency_hz=typed["carrier.carrier_frequency_hz"],
        noise_power_w=dbm_to_watts(typed["carrier.noise_power_dbm"]),
    )
    waveguide = WaveguideConfig.from_carrier(
        carrier,
        height_m=typed["waveguide.height_m"],
        effective_refractive_index=typed["waveguide.effective_refractive_index"],
        min_spacing_m=typed["waveguide.min_spacing_wavelengths"] * carrier.wavelength_m,
        x_min_m=typed["waveguide.x_min_m"],
        x_max_m=typed["waveguide.x_max_m"],
        feed_x_m=typed["waveguide.feed_x_m"],
    )
    return SystemConfig(
        num_antennas=typed["system.num_antennas"],
        num_users=typed["system.num_users"],
        num_targets=typed["system.num_targets"],
        slots_per_episode=typed["system.slots_per_episode"],
        slot_duration_s=typed["system.slot_duration_s"],
        energy_budget_j=typed["system.energy_budget_j"],
        max_user_power_w=typed["system.max_user_power_w"],
        snr_threshold_linear=db_to_linear(typed["system.snr_threshold_db"]),
        reward_weight=typed["system.reward_weight"],
        area_side_m=typed["system.area_side_m"],
        max_antenna_step_m=typed["system.max_antenna_step_m"],
        max_user_step_m=typed["system.max_user_step_m"],
        carrier=carrier,
        waveguide=waveguide,
        mobility_mode=typed["system.mobility_mode"],
        snr_penalty_domain=typed["system.snr_penalty_domain"],
    )


def default_experiment_config(**training_overrides) -> ExperimentConfig:
    """The built-in defaults (same values the shipped default.ini carries),
    with optional ``section.key`` string overrides for tests and tools."""
    return load_experiment_config(path=None, overrides=training_overrides)
