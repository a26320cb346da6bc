"""Seeded experiments: trial execution, summaries, CSV output and exact enumerators."""

from __future__ import annotations

import csv
import itertools
import math
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from os import PathLike
from typing import Iterable, Sequence

import numpy as np

from ._validation import FLOAT_TOL, ConfigurationError, check_natural, make_rng
from .adversary import HardInstanceSpec, hard_instance
from .curves import Instance, load_instance, max_final_reward, opt_arm, random_instance
from .environment import BanditEnvironment
from .policies import (
    RoundRobinConfig,
    explore_bounds,
    explore_then_exploit,
    is_hidden_horizon_policy,
    make_policy,
    random_round_robin,
)

CSV_COLUMNS = (
    "trial",
    "seed",
    "k",
    "T",
    "alg_reward",
    "opt_reward",
    "ratio",
    "max_pull_alg",
    "max_pull_opt",
    "elapsed",
)


class InvariantViolation(AssertionError):
    """A trial record contradicts a property every run must satisfy."""


@dataclass
class ExperimentConfig:
    """Declarative description of a batch of trials.

    ``source`` is ``"hard"`` (hidden arm drawn per trial unless ``i_star`` is
    set), ``"random"`` (a fresh ``random_instance`` of ``family`` per trial) or
    ``"file"`` (``instance_path``, horizon from ``T`` or the file).
    """

    policy: str = "rrr"
    source: str = "hard"
    k: int | None = None
    T: int | None = None
    m: float | None = None
    t_param: float | None = None
    c2: float = 1.0
    family: str = "mixed"
    instance_path: str | None = None
    i_star: int | None = None
    trials: int = 1
    base_seed: int = 0
    horizon_mode: str = "known"
    out: str | None = None

    def __post_init__(self):
        check_natural(self.trials, "trials", minimum=1)
        check_natural(self.base_seed, "base_seed")
        if self.source not in ("hard", "random", "file"):
            raise ConfigurationError(f"unknown instance source {self.source!r}")
        if self.horizon_mode not in ("known", "unknown"):
            raise ConfigurationError("horizon_mode must be 'known' or 'unknown'")
        if self.source == "file":
            if not self.instance_path or not os.path.exists(self.instance_path):
                raise ConfigurationError(f"instance file not found: {self.instance_path!r}")
        else:
            check_natural(self.k, "k", minimum=1)
            check_natural(self.T, "T", minimum=1)
        if self.source == "hard":
            HardInstanceSpec(self.k, self.T, self.i_star or 0)
        if is_hidden_horizon_policy(self.policy):
            self.horizon_mode = "unknown"
        make_policy(self.policy, m=self.m, t_param=self.t_param)  # fail fast on bad policy params


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    seed: int
    k: int
    T: int
    alg_reward: float
    opt_reward: float
    ratio: float
    max_pull_alg: float
    max_pull_opt: float
    elapsed: int

    def row(self) -> list[str]:
        def num(x: float) -> str:
            return "" if math.isinf(x) else f"{x:.17g}"

        return [
            str(self.trial),
            str(self.seed),
            str(self.k),
            str(self.T),
            num(self.alg_reward),
            num(self.opt_reward),
            num(self.ratio),
            num(self.max_pull_alg),
            num(self.max_pull_opt),
            str(self.elapsed),
        ]


def build_instance(config: ExperimentConfig, seed: int) -> Instance:
    if config.source == "hard":
        i_star = config.i_star
        if i_star is None:
            i_star = int(make_rng(seed, 0).integers(config.k))
        return hard_instance(HardInstanceSpec(config.k, config.T, i_star))
    if config.source == "random":
        return random_instance(config.k, config.T, make_rng(seed, 0), config.family)
    inst = load_instance(config.instance_path)
    horizon = config.T if config.T is not None else inst.horizon
    if horizon is None:
        raise ConfigurationError("instance file has no horizon; pass T")
    return inst.with_horizon(horizon)


def run_trial(config: ExperimentConfig, trial: int) -> TrialRecord:
    seed = config.base_seed + trial
    instance = build_instance(config, seed)
    T = instance.horizon
    env = BanditEnvironment(instance, hidden=config.horizon_mode == "unknown")
    policy = make_policy(config.policy, m=config.m, t_param=config.t_param)
    trace = policy(env, seed)
    alg = trace.total_reward()
    _, opt = opt_arm(instance, T)
    record = TrialRecord(
        trial=trial,
        seed=seed,
        k=instance.k,
        T=T,
        alg_reward=alg,
        opt_reward=opt,
        ratio=opt / alg if alg > 0 else math.inf,
        max_pull_alg=trace.max_pull_reward(),
        max_pull_opt=max_final_reward(instance, T),
        elapsed=env.elapsed,
    )
    check_record(record)
    return record


def check_record(r: TrialRecord) -> None:
    """Per-trial sanity: reward bounds, hindsight optimality, and the max-pull facts."""
    slack = FLOAT_TOL * max(1.0, r.opt_reward)
    if r.alg_reward < 0:
        raise InvariantViolation(f"trial {r.trial}: negative reward {r.alg_reward}")
    if r.elapsed > r.T:
        raise InvariantViolation(f"trial {r.trial}: {r.elapsed} pulls exceed horizon {r.T}")
    if r.alg_reward > r.opt_reward + slack:
        raise InvariantViolation(f"trial {r.trial}: ALG {r.alg_reward} above hindsight OPT {r.opt_reward}")
    if r.elapsed and r.max_pull_alg * r.elapsed < r.alg_reward - slack:
        raise InvariantViolation(f"trial {r.trial}: best pull below the average pull")
    if not (r.max_pull_opt * r.T + slack >= r.opt_reward >= r.max_pull_opt * r.T / 2 - slack):
        raise InvariantViolation(f"trial {r.trial}: OPT outside [f*(T) T/2, f*(T) T]")


def worker_count() -> int:
    env = os.environ.get("BANDITS_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigurationError(f"BANDITS_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def run_experiment(config: ExperimentConfig, workers: int | None = None) -> list[TrialRecord]:
    """Run ``config.trials`` trials with seeds ``base_seed + trial``, sorted by trial index."""
    workers = worker_count() if workers is None else max(1, workers)
    trials = range(config.trials)
    if workers == 1 or config.trials < 2 * workers:
        records = [run_trial(config, t) for t in trials]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunk = max(1, config.trials // (8 * workers))
            records = list(pool.map(run_trial, itertools.repeat(config), trials, chunksize=chunk))
    records.sort(key=lambda r: r.trial)
    if config.out:
        write_csv(records, config.out)
    return records


def mean_se(values: Sequence[float]) -> tuple[float, float]:
    """Mean (compensated sum) and standard error with the ``n - 1`` variance."""
    n = len(values)
    if n == 0:
        raise ValueError("no values")
    mean = math.fsum(values) / n
    if n == 1 or math.isinf(mean):
        return mean, 0.0 if n == 1 else math.inf
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var / n)


def mean_ci(values: Sequence[float], z: float = 1.96) -> tuple[float, tuple[float, float]]:
    mean, se = mean_se(values)
    return mean, (mean - z * se, mean + z * se)


@dataclass(frozen=True)
class Summary:
    n: int
    alg_mean: float
    alg_se: float
    alg_median: float
    alg_ci: tuple[float, float]
    opt_mean: float
    ratio_mean: float
    ratio_median: float
    ratio_ci: tuple[float, float]
    ratio_of_means: float
    max_pull_mean: float
    max_pull_se: float
    max_pull_ratio_mean: float
    extra: dict = field(default_factory=dict)


def summarize(records: Iterable[TrialRecord]) -> Summary:
    """Aggregate trial records; every record is re-checked first (raises ``InvariantViolation``)."""
    records = list(records)
    if not records:
        raise ValueError("summarize needs at least one record")
    for r in records:
        check_record(r)
    algs = [r.alg_reward for r in records]
    ratios = [r.ratio for r in records]
    maxes = [r.max_pull_alg for r in records]
    alg_mean, alg_se = mean_se(algs)
    ratio_mean, ratio_se = mean_se(ratios)
    max_mean, max_se = mean_se(maxes)
    opt_mean = math.fsum(r.opt_reward for r in records) / len(records)
    max_ratios = [r.max_pull_opt / r.max_pull_alg if r.max_pull_alg > 0 else math.inf for r in records]
    return Summary(
        n=len(records),
        alg_mean=alg_mean,
        alg_se=alg_se,
        alg_median=statistics.median(algs),
        alg_ci=(alg_mean - 1.96 * alg_se, alg_mean + 1.96 * alg_se),
        opt_mean=opt_mean,
        ratio_mean=ratio_mean,
        ratio_median=statistics.median(ratios),
        ratio_ci=(ratio_mean - 1.96 * ratio_se, ratio_mean + 1.96 * ratio_se),
        ratio_of_means=opt_mean / alg_mean if alg_mean > 0 else math.inf,
        max_pull_mean=max_mean,
        max_pull_se=max_se,
        max_pull_ratio_mean=math.fsum(max_ratios) / len(max_ratios),
    )


def write_csv(records: Iterable[TrialRecord], path: str | PathLike) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow(r.row())


# guarantees (expected reward lower bounds)


def rrr_guarantee(opt: float, k: int, c2: float = 1.0) -> float:
    """Known-``m`` round robin: ``OPT / (8 c2 sqrt(k))``."""
    return opt / (8 * c2 * math.sqrt(k))


def explore_exploit_guarantee(opt: float, k: int) -> float:
    """``OPT / (256 sqrt(k) (3 + log2(4k)))``."""
    return opt / (256 * math.sqrt(k) * (3 + math.log2(4 * k)))


def doubling_guarantee(opt: float, k: int) -> float:
    """``OPT / (8192 sqrt(k) log2(128k))``."""
    return opt / (8192 * math.sqrt(k) * math.log2(128 * k))


def policy_guarantee(policy: str, opt: float, k: int, c2: float = 1.0) -> float | None:
    if policy == "rrr":
        return rrr_guarantee(opt, k, c2)
    if policy == "explore_exploit":
        return explore_exploit_guarantee(opt, k)
    if policy == "doubling":
        return doubling_guarantee(opt, k)
    return None


# exact enumerators


def rrr_order_rewards(instance: Instance, m: float, t_param: float, budget: int) -> list[Fraction]:
    """Exact total reward of round robin for every one of the ``k!`` arm orders."""
    out = []
    for order in itertools.permutations(range(instance.k)):
        env = BanditEnvironment(instance, budget)
        trace = random_round_robin(env, RoundRobinConfig(m, t_param), order=order)
        out.append(sum((Fraction(x) for x in trace.rewards.tolist()), Fraction(0)))
    return out


def rrr_exact_expectation(instance: Instance, m: float, t_param: float, budget: int) -> Fraction:
    """Expected round-robin reward over a uniformly random arm order, as an exact fraction."""
    rewards = rrr_order_rewards(instance, m, t_param, budget)
    return sum(rewards, Fraction(0)) / len(rewards)


def explore_exploit_grid_expectation(instance: Instance, t_total: int, seed: int) -> tuple[float, float]:
    """Reward of explore-then-exploit averaged exactly over the exponent grid.

    The exploration phase is run once; each grid exponent then gets its own copy
    of the environment and the same arm order (drawn from ``seed``).  Returns the
    mean total reward and the mean best single pull.
    """
    env = BanditEnvironment(instance, t_total)
    bounds = explore_bounds(env.copy(), t_total, t_total // 2 - instance.k, 1)
    totals, maxes = [], []
    for j in bounds.grid:
        trace = explore_then_exploit(env.copy(), t_total, seed, j=j)
        totals.append(trace.total_reward())
        maxes.append(trace.max_pull_reward())
    return math.fsum(totals) / len(totals), math.fsum(maxes) / len(maxes)


def loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    slope, _ = np.polyfit(np.log(xs), np.log(ys), 1)
    return float(slope)
