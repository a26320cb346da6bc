"""Simulation state for one run: per-arm pull counters, horizon and the pull trace.

Rewards depend on how often an arm has been pulled, never on the global step:
the ``n``-th pull of arm ``i`` always pays ``f_i(n)``.
"""

from __future__ import annotations

import csv
import math
from os import PathLike
from typing import Callable

import numpy as np

from ._validation import ConfigurationError, check_arm, check_natural
from .curves import Instance

_EMPTY_I = np.zeros(0, dtype=np.int64)
_EMPTY_F = np.zeros(0, dtype=np.float64)


class PullTrace:
    """Append-only record of pulls as parallel arrays: step, arm, pull_index, reward.

    ``step`` is the 1-based global step; ``pull_index`` is the 1-based count of
    that arm's pulls, which is also the argument its reward curve was evaluated at.
    """

    def __init__(self, steps=None, arms=None, pull_indices=None, rewards=None):
        self._chunks: list[tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]] = []
        self._cache = None
        if steps is not None and len(steps):
            self._append(
                np.asarray(steps, dtype=np.int64),
                np.asarray(arms, dtype=np.int64),
                np.asarray(pull_indices, dtype=np.int64),
                np.asarray(rewards, dtype=np.float64),
            )

    def _append(self, steps, arms, pull_indices, rewards) -> None:
        if len(steps):
            self._chunks.append((steps, arms, pull_indices, rewards))
            self._cache = None

    def _columns(self):
        if self._cache is None:
            if not self._chunks:
                self._cache = (_EMPTY_I, _EMPTY_I, _EMPTY_I, _EMPTY_F)
            elif len(self._chunks) == 1:
                self._cache = self._chunks[0]
            else:
                cols = tuple(np.concatenate(c) for c in zip(*self._chunks))
                self._chunks = [cols]
                self._cache = cols
        return self._cache

    @property
    def steps(self) -> np.ndarray:
        return self._columns()[0]

    @property
    def arms(self) -> np.ndarray:
        return self._columns()[1]

    @property
    def pull_indices(self) -> np.ndarray:
        return self._columns()[2]

    @property
    def rewards(self) -> np.ndarray:
        return self._columns()[3]

    def __len__(self) -> int:
        return sum(len(c[0]) for c in self._chunks)

    def __iter__(self):
        s, a, p, r = self._columns()
        for row in zip(s.tolist(), a.tolist(), p.tolist(), r.tolist()):
            yield row

    def since(self, step: int) -> "PullTrace":
        """Records with global step strictly greater than ``step``."""
        s, a, p, r = self._columns()
        cut = int(np.searchsorted(s, step, side="right"))
        return PullTrace(s[cut:], a[cut:], p[cut:], r[cut:])

    def concat(self, other: "PullTrace") -> "PullTrace":
        out = PullTrace()
        for chunk in self._chunks + other._chunks:
            out._append(*chunk)
        return out

    def pull_counts(self, k: int) -> np.ndarray:
        return np.bincount(self.arms, minlength=k)

    def total_reward(self) -> float:
        return total_reward(self)

    def max_pull_reward(self) -> float:
        return max_pull_reward(self)

    def copy(self) -> "PullTrace":
        out = PullTrace()
        out._chunks = list(self._chunks)
        return out


def total_reward(trace: PullTrace) -> float:
    """Cumulative reward, summed with ``math.fsum`` so it is order-independent."""
    return math.fsum(trace.rewards.tolist())


def max_pull_reward(trace: PullTrace) -> float:
    """Largest single-pull reward; 0 for an empty trace."""
    r = trace.rewards
    return float(r.max()) if r.size else 0.0


def write_trace_csv(trace: PullTrace, path: str | PathLike) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "arm", "pull_index", "reward"])
        for step, arm, idx, reward in trace:
            w.writerow([step, arm, idx, f"{reward:.17g}"])


def read_trace_csv(path: str | PathLike) -> PullTrace:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return PullTrace(
        [int(r["step"]) for r in rows],
        [int(r["arm"]) for r in rows],
        [int(r["pull_index"]) for r in rows],
        [float(r["reward"]) for r in rows],
    )


class BanditEnvironment:
    """Mutable state of one run against an ``Instance``.

    Parameters
    ----------
    instance : Instance
    horizon : int, optional
        Total pull budget; defaults to ``instance.horizon``.
    hidden : bool
        Unknown-horizon mode.  The budget is still enforced, but ``horizon`` and
        ``remaining()`` report ``None``; policies learn the end of time only from
        a refused pull.

    A pull that would exceed the horizon is refused without touching the state
    and sets ``exhausted``; ``pull`` then returns ``None``.
    """

    def __init__(self, instance: Instance, horizon: int | None = None, *, hidden: bool = False):
        horizon = instance.horizon if horizon is None else horizon
        if horizon is None:
            raise ConfigurationError("environment needs a horizon (none given and instance has none)")
        self.instance = instance
        self._horizon = check_natural(horizon, "horizon", minimum=1)
        self.hidden = bool(hidden)
        self.pull_counts = np.zeros(instance.k, dtype=np.int64)
        self.elapsed = 0
        self.exhausted = False
        self.trace = PullTrace()

    @property
    def k(self) -> int:
        return self.instance.k

    @property
    def horizon(self) -> int | None:
        return None if self.hidden else self._horizon

    def remaining(self) -> int | None:
        """Pulls left, or ``None`` when the horizon is hidden."""
        return None if self.hidden else self._horizon - self.elapsed

    def copy(self) -> "BanditEnvironment":
        out = BanditEnvironment.__new__(BanditEnvironment)
        out.instance = self.instance
        out._horizon = self._horizon
        out.hidden = self.hidden
        out.pull_counts = self.pull_counts.copy()
        out.elapsed = self.elapsed
        out.exhausted = self.exhausted
        out.trace = self.trace.copy()
        return out

    def _commit(self, arm: int, rewards: np.ndarray) -> None:
        n = len(rewards)
        if not n:
            return
        start = self.pull_counts[arm]
        self.trace._append(
            np.arange(self.elapsed + 1, self.elapsed + n + 1, dtype=np.int64),
            np.full(n, arm, dtype=np.int64),
            np.arange(start + 1, start + n + 1, dtype=np.int64),
            rewards,
        )
        self.pull_counts[arm] += n
        self.elapsed += n

    def pull(self, arm: int) -> float | None:
        """Pull ``arm`` once; its reward, or ``None`` if the horizon is spent."""
        arm = check_arm(arm, self.k)
        if self.elapsed >= self._horizon:
            self.exhausted = True
            return None
        reward = self.instance.arms[arm].values(self.pull_counts[arm] + 1)[()]
        self._commit(arm, np.array([reward], dtype=np.float64))
        return float(reward)

    def pull_until(
        self,
        arm: int,
        stop: Callable[[np.ndarray, int], np.ndarray] | None = None,
        limit: int | None = None,
    ) -> np.ndarray:
        """Pull ``arm`` repeatedly and return the rewards received.

        Equivalent to pulling one at a time and stopping right after the first
        pull for which ``stop`` is true, after ``limit`` pulls, or when the
        horizon refuses a pull (which sets ``exhausted``).  ``stop(rewards, done)``
        gets the rewards of a block of consecutive pulls, ``done`` being the
        number of pulls this call made before the block, and returns a boolean
        mask.  Blocks grow geometrically, so a run of length ``n`` costs
        ``O(log n)`` vectorized evaluations.
        """
        arm = check_arm(arm, self.k)
        curve = self.instance.arms[arm]
        done = 0
        out = []
        block = 32
        while True:
            want = block if limit is None else min(block, limit - done)
            if want <= 0:
                break
            room = self._horizon - self.elapsed
            n = min(want, room)
            if n <= 0:
                self.exhausted = True
                break
            base = self.pull_counts[arm]
            rewards = curve.values(np.arange(base + 1, base + n + 1))
            if stop is not None:
                hits = np.flatnonzero(stop(rewards, done))
                if hits.size:
                    rewards = rewards[: hits[0] + 1]
                    self._commit(arm, rewards)
                    out.append(rewards)
                    break
            self._commit(arm, rewards)
            out.append(rewards)
            done += n
            if n < want:
                self.exhausted = True
                break
            block *= 2
        return np.concatenate(out) if out else _EMPTY_F.copy()

    def pull_sequence(self, arms) -> np.ndarray:
        """Pull the given arms in order; stops early (and sets ``exhausted``) at the horizon."""
        arms = np.asarray(arms, dtype=np.int64)
        if arms.size and (arms.min() < 0 or arms.max() >= self.k):
            raise ConfigurationError("arm index out of range in pull sequence")
        room = self._horizon - self.elapsed
        if arms.size > room:
            arms = arms[:room]
            self.exhausted = True
        n = arms.size
        if not n:
            return _EMPTY_F.copy()
        # pull index of each element: prior count + running occurrence number of that arm
        order = np.argsort(arms, kind="stable")
        sorted_arms = arms[order]
        starts = np.searchsorted(sorted_arms, sorted_arms, side="left")
        occurrence = np.empty(n, dtype=np.int64)
        occurrence[order] = np.arange(n) - starts + 1
        pull_idx = self.pull_counts[arms] + occurrence
        rewards = np.empty(n, dtype=np.float64)
        for a in np.unique(arms).tolist():
            sel = arms == a
            rewards[sel] = self.instance.arms[a].values(pull_idx[sel])
        self.trace._append(
            np.arange(self.elapsed + 1, self.elapsed + n + 1, dtype=np.int64), arms, pull_idx, rewards
        )
        self.pull_counts += np.bincount(arms, minlength=self.k)
        self.elapsed += n
        return rewards


def replay(instance: Instance, arms, horizon: int | None = None) -> PullTrace:
    """Re-run a sequence of arm choices against a fresh environment."""
    arms = np.asarray(arms, dtype=np.int64)
    env = BanditEnvironment(instance, horizon if horizon is not None else max(len(arms), 1))
    env.pull_sequence(arms)
    return env.trace
