"""Online policies for improving bandits.

* ``random_round_robin``: visit arms in random order, staying on each while its
  reward keeps up with the linear ramp ``m * t / t_param``.
* ``find_mhat``: explore every arm briefly, bracket the best arm's final reward
  in ``[L, U]`` and draw a guess from a doubling grid over that bracket.
* ``explore_then_exploit``: ``find_mhat`` on the first half of the horizon, round
  robin with the guess on the rest.
* ``unknown_time_wrapper``: the same, restarted on horizons ``4k, 8k, 16k, ...``
  until the environment refuses a pull.

Policies take an environment and a seed and return the ``PullTrace`` of the pulls
they made.  All randomness comes from ``make_rng(seed, ...)`` substreams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ._validation import (
    FLOAT_TOL,
    ConfigurationError,
    ceil_log2,
    check_arm,
    check_natural,
    check_nonnegative,
    make_rng,
)
from .environment import BanditEnvironment, PullTrace

# substream ids under one trial seed
EXPLORE_STREAM = 1
EXPLOIT_STREAM = 2


@dataclass(frozen=True)
class RoundRobinConfig:
    m: float
    t_param: float
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "m", check_nonnegative(self.m, "m"))
        if not self.t_param >= 1:
            raise ConfigurationError(f"t_param must be >= 1, got {self.t_param}")
        check_natural(self.rng_seed, "rng_seed")


@dataclass(frozen=True)
class MHatConfig:
    t_pred: float
    u_multiplier: int = 1
    rng_seed: int = 0

    def __post_init__(self):
        if not self.t_pred >= 1:
            raise ConfigurationError(f"t_pred must be >= 1, got {self.t_pred}")
        if self.u_multiplier not in (1, 4):
            raise ConfigurationError("u_multiplier must be 1 or 4")
        check_natural(self.rng_seed, "rng_seed")


@dataclass(frozen=True)
class AnalysisConfig:
    """Constant ``c2`` of the promise ``m in [f*(T)/c2, f*(T)]``; used only when checking bounds."""

    c2: float = 1.0

    def __post_init__(self):
        if not self.c2 >= 1:
            raise ConfigurationError(f"c2 must be >= 1, got {self.c2}")


def _below_ramp(m: float, t_param: float) -> Callable[[np.ndarray, int], np.ndarray]:
    # abandon on f < m*tau/t_param, compared as f*t_param < m*tau; ties (and float noise) continue
    def stop(rewards: np.ndarray, done: int) -> np.ndarray:
        tau = np.arange(done + 1, done + len(rewards) + 1, dtype=np.float64)
        lhs = rewards * t_param
        rhs = m * tau
        return lhs < rhs - FLOAT_TOL * np.maximum(1.0, rhs)

    return stop


def random_round_robin(
    env: BanditEnvironment,
    config: RoundRobinConfig,
    *,
    max_pulls: int | None = None,
    order: Sequence[int] | None = None,
) -> PullTrace:
    """Random round robin with abandonment threshold ``m * t_i / t_param``.

    Arms are taken in a uniformly random order (``order`` overrides it).  Each
    chosen arm is pulled at least once and kept while its reward satisfies
    ``f_i(c_i + t_i) >= m * t_i / t_param``, where ``t_i`` counts this call's
    pulls of the arm and ``c_i`` its earlier pulls in the environment.  Once all
    arms are abandoned, the remaining budget goes to the arm with the highest
    last reward (lowest index on ties).  Stops after ``max_pulls`` pulls or when
    the environment is exhausted.
    """
    k = env.k
    if order is None:
        order = make_rng(config.rng_seed).permutation(k)
    else:
        order = [check_arm(a, k) for a in order]
        if sorted(order) != list(range(k)):
            raise ConfigurationError("order must be a permutation of the arms")
    start = env.elapsed
    budget = env.remaining()
    if max_pulls is not None:
        max_pulls = check_natural(max_pulls, "max_pulls")
        budget = max_pulls if budget is None else min(budget, max_pulls)
    stop = _below_ramp(config.m, config.t_param)

    used = 0
    last = np.full(k, -math.inf)
    for arm in order:
        if budget is not None and used >= budget:
            break
        rewards = env.pull_until(int(arm), stop, None if budget is None else budget - used)
        used += len(rewards)
        if len(rewards):
            last[arm] = rewards[-1]
        if env.exhausted:
            return env.trace.since(start)
    else:
        # every arm abandoned with budget to spare; the argmax arm stays the argmax once pulled
        if budget is None or used < budget:
            env.pull_until(int(np.argmax(last)), None, None if budget is None else budget - used)
    return env.trace.since(start)


@dataclass(frozen=True)
class MHatBounds:
    """Exploration summary: per-arm brackets, the combined bracket and the exponent grid."""

    n: int
    lower: tuple[float, ...]  # f_i(n) for each fully explored arm
    upper: tuple[float, ...]  # f_i(n) + (f_i(n) - f_i(n-1)) * (t_total - n)
    L: float
    U: float
    grid: tuple[int, ...]  # exponents j; the guess is L * 2**j

    def value(self, j: int) -> float:
        return 0.0 if self.L == 0 else self.L * 2.0**j


def explore_bounds(env: BanditEnvironment, t_total: int, t_pred: float, u_multiplier: int = 1) -> MHatBounds:
    """Pull each arm ``n = t_total // (2k)`` times and bracket the best final reward.

    Arms are explored in index order.  If the horizon runs out part way, only
    the arms that got all ``n`` pulls contribute.
    """
    k = env.k
    t_total = check_natural(t_total, "t_total", minimum=1)
    n = t_total // (2 * k)
    if n < 1:
        raise ConfigurationError(f"t_total={t_total} leaves no exploration pulls for k={k} arms")
    rem = env.remaining()
    if rem is not None and rem < k * n:
        raise ConfigurationError(f"exploration needs {k * n} pulls but only {rem} remain")

    lower, upper = [], []
    for arm in range(k):
        rewards = env.pull_until(arm, None, n)
        if len(rewards) < n:
            break
        c = int(env.pull_counts[arm])
        f_n = float(rewards[-1])
        f_prev = float(rewards[-2]) if n >= 2 else float(env.instance.arms[arm].values(c - 1))
        lower.append(f_n)
        upper.append(f_n + (f_n - f_prev) * (t_total - n))

    if not lower or max(lower) <= 0:
        return MHatBounds(n, tuple(lower), tuple(upper), 0.0, 0.0, (0,))
    L = 0.5 * max(lower)
    U = u_multiplier * max(upper)
    lo = -ceil_log2(t_total / t_pred)
    hi = ceil_log2(U / L)
    return MHatBounds(n, tuple(lower), tuple(upper), L, U, tuple(range(lo, hi + 1)))


def find_mhat(env: BanditEnvironment, config: MHatConfig, t_total: int, k: int | None = None) -> float:
    """Explore, then return ``L * 2**j`` for ``j`` drawn uniformly from the grid (0 if ``L == 0``).

    ``k`` is accepted for signature compatibility and must equal ``env.k``.
    """
    if k is not None and k != env.k:
        raise ConfigurationError(f"k={k} does not match the environment's {env.k} arms")
    bounds = explore_bounds(env, t_total, config.t_pred, config.u_multiplier)
    return bounds.value(draw_exponent(bounds, config.rng_seed))


def draw_exponent(bounds: MHatBounds, seed: int) -> int:
    """Uniform draw from ``bounds.grid``."""
    return bounds.grid[int(make_rng(seed).integers(len(bounds.grid)))]


def explore_then_exploit(
    env: BanditEnvironment,
    t_total: int | None = None,
    seed: int = 0,
    *,
    j: int | None = None,
    order: Sequence[int] | None = None,
) -> PullTrace:
    """Spend up to half of ``t_total`` on ``find_mhat``, the rest on round robin with the guess.

    Both phases use ``T_pred = t_param = t_total // 2 - k``.  ``j`` pins the grid
    exponent instead of sampling it and ``order`` pins the round-robin order;
    both exist for exact enumeration.
    """
    k = env.k
    if t_total is None:
        t_total = env.remaining()
        if t_total is None:
            raise ConfigurationError("explore_then_exploit needs t_total when the horizon is hidden")
    t_total = check_natural(t_total, "t_total")
    if t_total <= 4 * k:
        raise ConfigurationError(f"explore_then_exploit needs t_total > 4k (t_total={t_total}, k={k})")
    start = env.elapsed
    t_half = t_total // 2 - k
    bounds = explore_bounds(env, t_total, t_half, 1)
    if env.exhausted:
        return env.trace.since(start)
    if j is None:
        j = draw_exponent(bounds, _substream_seed(seed, EXPLORE_STREAM))
    m_hat = bounds.value(j)
    budget = t_total - (env.elapsed - start)
    random_round_robin(
        env, RoundRobinConfig(m_hat, t_half, _substream_seed(seed, EXPLOIT_STREAM)), max_pulls=budget, order=order
    )
    return env.trace.since(start)


def unknown_time_wrapper(env: BanditEnvironment, seed: int = 0) -> PullTrace:
    """Doubling-horizon explore-then-exploit for environments with a hidden horizon.

    Epoch ``e`` uses the guess ``T' = 4k * 2**e``: ``T'/2`` exploration pulls with
    the upper bracket scaled by 4, then ``T'/2 - k`` round-robin pulls.  Pull
    counts carry over between epochs.  Returns once a pull is refused.
    """
    if not env.hidden:
        raise ConfigurationError("unknown_time_wrapper expects an environment in unknown-horizon mode")
    k = env.k
    start = env.elapsed
    guess = 4 * k
    epoch = 0
    while True:
        t_half = guess // 2 - k
        cfg = MHatConfig(t_half, 4, _substream_seed(seed, 3 * epoch + 3))
        m_hat = find_mhat(env, cfg, guess, k)
        if env.exhausted:
            break
        random_round_robin(
            env, RoundRobinConfig(m_hat, t_half, _substream_seed(seed, 3 * epoch + 4)), max_pulls=t_half
        )
        if env.exhausted:
            break
        guess *= 2
        epoch += 1
    return env.trace.since(start)


def always_pull(env: BanditEnvironment, arm: int = 0) -> PullTrace:
    arm = check_arm(arm, env.k)
    start = env.elapsed
    env.pull_until(arm, None, env.remaining())
    return env.trace.since(start)


def uniform_baseline(env: BanditEnvironment) -> PullTrace:
    """Cycle 0, 1, ..., k-1 one pull at a time until the horizon."""
    start = env.elapsed
    rem = env.remaining()
    if rem is None:
        raise ConfigurationError("uniform_baseline needs a known horizon")
    env.pull_sequence(np.arange(rem) % env.k)
    return env.trace.since(start)


def _substream_seed(seed: int, stream: int) -> int:
    return int(make_rng(seed, stream).integers(2**63))


POLICY_NAMES = ("rrr", "explore_exploit", "doubling", "always_pull:<arm>", "uniform_baseline")

Policy = Callable[[BanditEnvironment, int], PullTrace]


def make_policy(name: str, *, m: float | None = None, t_param: float | None = None) -> Policy:
    """Build ``policy(env, seed) -> PullTrace`` from a CLI-style name.

    ``rrr`` needs ``m``; its ``t_param`` defaults to the environment's horizon.
    """
    if name == "rrr":
        if m is None:
            raise ConfigurationError("policy 'rrr' needs m")

        def rrr(env: BanditEnvironment, seed: int) -> PullTrace:
            tp = t_param if t_param is not None else env.remaining()
            if tp is None:
                raise ConfigurationError("policy 'rrr' needs t_param when the horizon is hidden")
            return random_round_robin(env, RoundRobinConfig(m, tp, seed))

        return rrr
    if name == "explore_exploit":
        return lambda env, seed: explore_then_exploit(env, None, seed)
    if name == "doubling":
        return lambda env, seed: unknown_time_wrapper(env, seed)
    if name == "uniform_baseline":
        return lambda env, seed: uniform_baseline(env)
    if name.startswith("always_pull"):
        _, _, arm_s = name.partition(":")
        try:
            arm = int(arm_s) if arm_s else 0
        except ValueError:
            raise ConfigurationError(f"bad arm in policy {name!r}") from None
        return lambda env, seed: always_pull(env, arm)
    raise ConfigurationError(f"unknown policy {name!r}; choose from {', '.join(POLICY_NAMES)}")


def is_hidden_horizon_policy(name: str) -> bool:
    return name == "doubling"
