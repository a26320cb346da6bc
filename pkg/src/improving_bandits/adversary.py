"""Hard instances for the lower bound and the generous-game accounting.

Every arm of the hard family is a decoy ``t/T`` capped at ``1/s`` after ``T/s``
pulls (``s = ceil(sqrt(k))``), except one hidden arm that keeps growing as
``t/T``.  The two are identical for the first ``T/s`` pulls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from ._validation import ConfigurationError, check_natural, make_rng
from .curves import Instance, RewardCurve
from .environment import BanditEnvironment, PullTrace


def sqrt_ceil(k: int) -> int:
    """Smallest ``s`` with ``s*s >= k``."""
    r = math.isqrt(k)
    return r if r * r == k else r + 1


@dataclass(frozen=True)
class HardInstanceSpec:
    """Hard instance parameters; ``i_star`` is the 0-based index of the growing arm."""

    k: int
    T: int
    i_star: int = 0

    def __post_init__(self):
        check_natural(self.k, "k", minimum=1)
        check_natural(self.T, "T", minimum=1)
        if not 0 <= self.i_star < self.k:
            raise ConfigurationError(f"i_star={self.i_star} out of range for k={self.k}")
        if self.T % self.s:
            raise ConfigurationError(f"T={self.T} must be divisible by ceil(sqrt(k))={self.s}")

    @property
    def s(self) -> int:
        return sqrt_ceil(self.k)

    @property
    def cap(self) -> int:
        """Pulls after which a decoy stops improving (``T/s``)."""
        return self.T // self.s

    @property
    def opt(self) -> float:
        """``sum(t/T for t in 1..T) = (T+1)/2``."""
        return (self.T + 1) / 2


def decoy_curve(k: int, T: int) -> RewardCurve:
    return RewardCurve.linear_capped(1 / T, T // sqrt_ceil(k))


def hard_instance(spec: HardInstanceSpec) -> Instance:
    star = RewardCurve.linear(1 / spec.T)
    decoy = decoy_curve(spec.k, spec.T)
    arms = tuple(star if i == spec.i_star else decoy for i in range(spec.k))
    return Instance(arms, spec.T)


def decoy_instance(k: int, T: int) -> Instance:
    """All ``k`` arms are decoys: what any algorithm sees before it identifies the hidden arm."""
    HardInstanceSpec(k, T)  # divisibility check
    return Instance((decoy_curve(k, T),) * k, T)


@dataclass(frozen=True)
class GameOutcome:
    base_reward: float
    granted_opt: bool
    final_reward: float


def generous_game_value(trace: PullTrace, spec: HardInstanceSpec) -> GameOutcome:
    """Score a run against the all-decoy instance once the hidden arm is placed at ``spec.i_star``.

    The run is upgraded to ``OPT_T`` when it pulled ``i_star`` strictly more than
    ``T/s`` times, i.e. long enough to tell it apart from a decoy.
    """
    base = trace.total_reward()
    pulls = int((trace.arms == spec.i_star).sum())
    granted = pulls > spec.cap
    return GameOutcome(base, granted, spec.opt if granted else base)


def generous_game_deterministic_bound(trace: PullTrace, k: int, T: int) -> float:
    """Exact expectation of the generous-game value over a uniformly placed hidden arm."""
    total = math.fsum(generous_game_value(trace, HardInstanceSpec(k, T, i)).final_reward for i in range(k))
    return total / k


def generous_bound_exact(trace: PullTrace, k: int, T: int) -> Fraction:
    """Same expectation in exact rational arithmetic over the trace's float rewards."""
    spec = HardInstanceSpec(k, T)
    base = sum((Fraction(r) for r in trace.rewards.tolist()), Fraction(0))
    counts = trace.pull_counts(k)
    granted = int((counts > spec.cap).sum())
    return (granted * Fraction(T + 1, 2) + (k - granted) * base) / k


def lower_bound_ceiling(k: int, T: int) -> float:
    """``3 * OPT_T / s``."""
    return 3 * HardInstanceSpec(k, T).opt / sqrt_ceil(k)


def run_against_decoys(policy, k: int, T: int, seed: int = 0) -> PullTrace:
    """Full-budget run of ``policy(env, seed)`` on the all-decoy instance."""
    env = BanditEnvironment(decoy_instance(k, T))
    return policy(env, seed)


@dataclass(frozen=True)
class RatioEstimate:
    trials: int
    alg_mean: float
    alg_ci: tuple[float, float]
    ratio_mean: float
    ratio_ci: tuple[float, float]
    opt: float


def estimate_ratio(policy, k: int, T: int, trials: int, seed: int = 0, *, hidden: bool = False) -> RatioEstimate:
    """Monte Carlo estimate of the reward and ``OPT/ALG`` on random hard instances.

    Trial ``n`` uses seed ``seed + n``: the hidden arm is drawn from its stream 0
    and the policy receives the trial seed.  Rewards are the real rewards on the
    realized instance, not generous-game scores.
    """
    from .harness import mean_ci  # local: harness imports this module

    trials = check_natural(trials, "trials", minimum=1)
    algs, ratios = [], []
    for n in range(trials):
        trial_seed = seed + n
        i_star = int(make_rng(trial_seed, 0).integers(k))
        spec = HardInstanceSpec(k, T, i_star)
        env = BanditEnvironment(hard_instance(spec), hidden=hidden)
        alg = policy(env, trial_seed).total_reward()
        algs.append(alg)
        ratios.append(spec.opt / alg if alg > 0 else math.inf)
    alg_mean, alg_ci = mean_ci(algs)
    ratio_mean, ratio_ci = mean_ci(ratios)
    return RatioEstimate(trials, alg_mean, alg_ci, ratio_mean, ratio_ci, HardInstanceSpec(k, T).opt)
