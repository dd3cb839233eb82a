"""Pinching-antenna ISAC simulation and maximum-entropy RL optimization.

Modules:
    physics  -- channel coefficients, rates, sensing SNR (pure functions)
    env      -- the sequential-decision environment with constraint projection
    nn       -- dense networks with manual gradients, policies, Adam
    agents   -- MERL plus TD3 / DDPG / random baselines and the replay buffer
    config   -- strict sectioned config files
    harness  -- campaigns, metric logs, reports, plots, grid-search oracle
    cli      -- the ``pinchisac`` command-line tool
"""

__version__ = "0.1.0"

from .physics import (  # noqa: F401
    AntennaLayout,
    CarrierConfig,
    Position3D,
    WaveguideConfig,
    db_to_linear,
    dbm_to_watts,
    effective_gain,
    free_space_coeff,
    linear_to_db,
    phase_shift,
    sensing_snr,
    spacing_satisfied,
    user_rate,
    watts_to_dbm,
)
from .env import (  # noqa: F401
    EnvAction,
    EnvState,
    PinchingIsacEnv,
    StepOutcome,
    SystemConfig,
    default_system_config,
)
from .agents import (  # noqa: F401
    AgentConfig,
    DdpgAgent,
    MerlAgent,
    RandomAgent,
    ReplayBuffer,
    Td3Agent,
    Transition,
    make_agent,
)
from .config import ConfigError, ExperimentConfig, load_experiment_config  # noqa: F401
from .harness import (  # noqa: F401
    StaticScenario,
    compare_report,
    emit_plots,
    grid_search_oracle,
    run_campaign,
)
