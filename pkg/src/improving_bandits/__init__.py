"""Simulation library for improving multi-armed bandits.

Arms pay ``f_i(t)`` on their ``t``-th pull, where every ``f_i`` is non-decreasing
with diminishing returns.  The package provides the reward model, round-robin
and explore-then-exploit policies, the hard instance family used for lower
bounds, exact oracles and a seeded experiment harness.
"""

from ._validation import ConfigurationError
from .adversary import (
    GameOutcome,
    HardInstanceSpec,
    estimate_ratio,
    generous_game_deterministic_bound,
    generous_game_value,
    hard_instance,
)
from .curves import (
    Instance,
    InstanceError,
    RewardCurve,
    allocation_oracle,
    eval_curve,
    load_instance,
    opt_arm,
    prefix_reward,
    validate_curve,
)
from .environment import BanditEnvironment, PullTrace, max_pull_reward, total_reward
from .harness import ExperimentConfig, TrialRecord, run_experiment, summarize, write_csv
from .policies import (
    MHatConfig,
    RoundRobinConfig,
    explore_then_exploit,
    find_mhat,
    make_policy,
    random_round_robin,
    unknown_time_wrapper,
)

__version__ = "0.1.0"
