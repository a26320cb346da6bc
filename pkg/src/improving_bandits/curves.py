"""Reward curves with diminishing returns, problem instances and offline oracles.

A curve ``f`` maps a pull count ``t >= 0`` to the reward of the ``t``-th pull of an
arm, with ``f(0) = 0``.  Every family here is monotone non-decreasing and
discretely concave, so increments ``f(t) - f(t-1)`` never grow.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from os import PathLike
from typing import Iterable, Mapping, NamedTuple

import numpy as np

from ._validation import FLOAT_TOL, ConfigurationError, check_natural, check_nonnegative

FAMILIES = (
    "linear_capped",
    "linear",
    "constant",
    "sqrt",
    "log",
    "geometric_saturating",
    "explicit",
)

_PARAMS = {
    "linear_capped": ("slope", "cap"),
    "linear": ("slope",),
    "constant": ("value",),
    "sqrt": ("scale",),
    "log": ("scale",),
    "geometric_saturating": ("scale", "ratio"),
    "explicit": (),
}


class InstanceError(ConfigurationError):
    """An instance file or curve set is malformed or violates diminishing returns."""


class OracleBudgetExceeded(RuntimeError):
    """The exact allocation DP would exceed its work cap."""


@dataclass(frozen=True, eq=True)
class RewardCurve:
    """A reward curve from one of the built-in families.

    ``params`` holds the family parameters (see ``_PARAMS``); ``increments`` is
    used only by the ``explicit`` family, whose last increment repeats forever.
    Use the classmethod constructors rather than building this directly.
    """

    family: str
    params: Mapping[str, float] = field(default_factory=dict)
    increments: tuple[float, ...] = ()

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(f"unknown curve family {self.family!r}")
        expected = set(_PARAMS[self.family])
        if set(self.params) != expected:
            raise ConfigurationError(
                f"{self.family} curve needs parameters {sorted(expected)}, got {sorted(self.params)}"
            )
        params = {}
        for name, value in self.params.items():
            if name == "cap":
                params[name] = check_natural(value, "cap")
            else:
                params[name] = check_nonnegative(value, name)
        if self.family == "geometric_saturating" and not params["ratio"] < 1:
            raise ConfigurationError("geometric_saturating ratio must lie in [0, 1)")
        object.__setattr__(self, "params", params)

        incs = tuple(float(x) for x in self.increments)
        if self.family != "explicit" and incs:
            raise ConfigurationError("increments are only meaningful for explicit curves")
        if not all(math.isfinite(x) for x in incs):
            raise ConfigurationError("explicit increments must be finite")
        object.__setattr__(self, "increments", incs)
        if self.family == "explicit":
            # f(0..L) and the prefix sums of f(1..L), built once.
            values = np.concatenate(([0.0], np.cumsum(incs))) if incs else np.zeros(1)
            object.__setattr__(self, "_table", values)
            object.__setattr__(self, "_prefix_table", np.cumsum(values))

    # constructors

    @classmethod
    def linear(cls, slope: float) -> "RewardCurve":
        return cls("linear", {"slope": slope})

    @classmethod
    def linear_capped(cls, slope: float, cap: int) -> "RewardCurve":
        """``slope * min(t, cap)``: linear growth up to ``cap`` pulls, flat afterwards."""
        return cls("linear_capped", {"slope": slope, "cap": cap})

    @classmethod
    def constant(cls, value: float) -> "RewardCurve":
        return cls("constant", {"value": value})

    @classmethod
    def sqrt(cls, scale: float) -> "RewardCurve":
        return cls("sqrt", {"scale": scale})

    @classmethod
    def log(cls, scale: float) -> "RewardCurve":
        return cls("log", {"scale": scale})

    @classmethod
    def geometric_saturating(cls, scale: float, ratio: float) -> "RewardCurve":
        """``scale * (1 - ratio**t)``, saturating at ``scale``."""
        return cls("geometric_saturating", {"scale": scale, "ratio": ratio})

    @classmethod
    def explicit(cls, increments: Iterable[float]) -> "RewardCurve":
        return cls("explicit", {}, tuple(increments))

    # evaluation

    def values(self, t) -> np.ndarray:
        """Vectorized ``f(t)`` for an array of nonnegative pull counts."""
        t = np.asarray(t, dtype=np.int64)
        p = self.params
        fam = self.family
        if fam == "linear":
            return p["slope"] * t
        if fam == "linear_capped":
            return p["slope"] * np.minimum(t, p["cap"])
        if fam == "constant":
            return np.where(t > 0, p["value"], 0.0)
        if fam == "sqrt":
            return p["scale"] * np.sqrt(t)
        if fam == "log":
            return p["scale"] * np.log1p(t)
        if fam == "geometric_saturating":
            r = p["ratio"]
            if r == 0.0:
                return np.where(t > 0, p["scale"], 0.0)
            return -p["scale"] * np.expm1(t * math.log(r))
        # explicit
        table = self._table
        last = len(table) - 1
        tail = self.increments[-1] if self.increments else 0.0
        inside = np.minimum(t, last)
        return table[inside] + tail * np.maximum(t - last, 0)

    def __call__(self, t: int) -> float:
        return eval_curve(self, t)

    def to_dict(self) -> dict:
        if self.family == "explicit":
            return {"family": "explicit", "increments": list(self.increments)}
        return {"family": self.family, **self.params}

    @classmethod
    def from_dict(cls, data: Mapping) -> "RewardCurve":
        data = dict(data)
        try:
            family = data.pop("family")
        except KeyError:
            raise InstanceError("arm entry is missing 'family'") from None
        if family == "explicit":
            incs = data.pop("increments", None)
            if incs is None or data:
                raise InstanceError("explicit arm needs exactly an 'increments' list")
            return cls.explicit(incs)
        return cls(family, data)


@dataclass(frozen=True)
class Instance:
    """``k`` reward curves plus an optional horizon."""

    arms: tuple[RewardCurve, ...]
    horizon: int | None = None

    def __post_init__(self):
        arms = tuple(self.arms)
        if not arms:
            raise ConfigurationError("an instance needs at least one arm")
        if not all(isinstance(a, RewardCurve) for a in arms):
            raise ConfigurationError("instance arms must be RewardCurve objects")
        object.__setattr__(self, "arms", arms)
        if self.horizon is not None:
            object.__setattr__(self, "horizon", check_natural(self.horizon, "horizon", minimum=1))

    @property
    def k(self) -> int:
        return len(self.arms)

    def with_horizon(self, horizon: int | None) -> "Instance":
        return Instance(self.arms, horizon)

    def to_dict(self) -> dict:
        out: dict = {"arms": [a.to_dict() for a in self.arms]}
        if self.horizon is not None:
            out["horizon"] = self.horizon
        return out

    @classmethod
    def from_dict(cls, data: Mapping, *, validate: bool = True) -> "Instance":
        if not isinstance(data, Mapping) or "arms" not in data:
            raise InstanceError("instance JSON must be an object with an 'arms' list")
        try:
            arms = tuple(RewardCurve.from_dict(a) for a in data["arms"])
            inst = cls(arms, data.get("horizon"))
        except InstanceError:
            raise
        except ConfigurationError as exc:
            raise InstanceError(str(exc)) from None
        if validate:
            validate_instance(inst)
        return inst


def eval_curve(curve: RewardCurve, t: int) -> float:
    """Reward of the ``t``-th pull; ``eval_curve(c, 0) == 0``."""
    return float(curve.values(check_natural(t, "t")))


def prefix_reward(curve: RewardCurve, t: int) -> float:
    """``sum(f(s) for s in 1..t)``: the reward of pulling one arm ``t`` times."""
    t = check_natural(t, "t")
    if t == 0:
        return 0.0
    p = curve.params
    fam = curve.family
    if fam == "linear":
        return p["slope"] * (t * (t + 1) / 2)
    if fam == "linear_capped":
        c = min(t, p["cap"])
        return p["slope"] * (c * (c + 1) / 2 + c * (t - c))
    if fam == "constant":
        return p["value"] * t
    if fam == "explicit":
        table = curve._table
        last = len(table) - 1
        if t <= last:
            return float(curve._prefix_table[t])
        extra = t - last
        tail = curve.increments[-1] if curve.increments else 0.0
        return float(curve._prefix_table[last] + table[last] * extra + tail * (extra * (extra + 1) / 2))
    # sqrt, log, geometric: no cheap closed form that is as accurate as a compensated sum
    return math.fsum(curve.values(np.arange(1, t + 1)))


class CurveViolation(NamedTuple):
    index: int
    rule: str  # "nonnegative" | "monotone" | "diminishing_returns"


def validate_curve(curve: RewardCurve, horizon: int) -> CurveViolation | None:
    """First ``t <= horizon`` at which the curve breaks a required property, or ``None``.

    Checks ``f(t) >= 0``, ``f(t+1) >= f(t)`` and
    ``f(t+1) - f(t) <= f(t) - f(t-1)`` with an absolute slack of ``FLOAT_TOL``.
    """
    horizon = check_natural(horizon, "horizon", minimum=1)
    f = curve.values(np.arange(horizon + 2))
    d = np.diff(f)  # d[t] = f(t+1) - f(t)
    t = np.arange(horizon + 1)
    bad_nonneg = f[: horizon + 1] < -FLOAT_TOL
    bad_mono = d < -FLOAT_TOL
    bad_dr = np.zeros(horizon + 1, dtype=bool)
    bad_dr[1:] = d[1:] > d[:-1] + FLOAT_TOL
    worst = None
    for rule, mask in (("nonnegative", bad_nonneg), ("monotone", bad_mono), ("diminishing_returns", bad_dr)):
        hits = t[mask]
        if hits.size and (worst is None or hits[0] < worst.index):
            worst = CurveViolation(int(hits[0]), rule)
    return worst


def validation_horizon(curve: RewardCurve, horizon: int | None) -> int:
    """Horizon long enough to cover both ``horizon`` and every explicit increment."""
    h = horizon or 1
    if curve.family == "explicit":
        h = max(h, len(curve.increments) + 1)
    return h


def validate_instance(instance: Instance, horizon: int | None = None) -> None:
    """Raise ``InstanceError`` naming the first arm and index that violate the model."""
    horizon = horizon if horizon is not None else instance.horizon
    for i, curve in enumerate(instance.arms):
        v = validate_curve(curve, validation_horizon(curve, horizon))
        if v is not None:
            raise InstanceError(f"arm {i} violates {v.rule.replace('_', ' ')} at t={v.index}")


def load_instance(path: str | PathLike, *, validate: bool = True) -> Instance:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InstanceError(f"{path}: not valid JSON ({exc})") from None
    return Instance.from_dict(data, validate=validate)


def save_instance(instance: Instance, path: str | PathLike) -> None:
    with open(path, "w") as fh:
        json.dump(instance.to_dict(), fh, indent=2)
        fh.write("\n")


def opt_arm(instance: Instance, t: int) -> tuple[int, float]:
    """Best single arm in hindsight for ``t`` pulls and its prefix reward (lowest index on ties)."""
    t = check_natural(t, "t", minimum=1)
    best, best_value = 0, -math.inf
    for i, curve in enumerate(instance.arms):
        value = prefix_reward(curve, t)
        if value > best_value:
            best, best_value = i, value
    return best, best_value


def max_final_reward(instance: Instance, t: int) -> float:
    """``max_i f_i(t)``: the largest single-pull reward any arm can reach within ``t`` pulls."""
    return max(eval_curve(c, t) for c in instance.arms)


def allocation_oracle(
    instance: Instance, t: int, *, max_work: int = 10**6
) -> tuple[tuple[int, ...], float]:
    """Exact best split of ``t`` pulls across arms, by dynamic programming.

    Maximizes ``sum_i prefix_reward(arm_i, t_i)`` over all ``sum_i t_i == t``.
    Among equal values the allocation found first (fewest pulls on later arms)
    is kept.  Raises ``OracleBudgetExceeded`` when ``k * t**2 > max_work``.
    """
    t = check_natural(t, "t", minimum=1)
    k = instance.k
    if k * t * t > max_work:
        raise OracleBudgetExceeded(f"k*t^2 = {k * t * t} exceeds the oracle cap {max_work}")
    prefixes = [[prefix_reward(c, s) for s in range(t + 1)] for c in instance.arms]

    best = prefixes[0][:]  # best[s]: value of spending s pulls on arms 0..j
    choice = [[s for s in range(t + 1)]]
    for j in range(1, k):
        pj = prefixes[j]
        new = [0.0] * (t + 1)
        arg = [0] * (t + 1)
        for s in range(t + 1):
            top, top_a = best[s], 0
            for a in range(1, s + 1):
                cand = best[s - a] + pj[a]
                if cand > top:
                    top, top_a = cand, a
            new[s], arg[s] = top, top_a
        best = new
        choice.append(arg)

    alloc = [0] * k
    s = t
    for j in range(k - 1, 0, -1):
        alloc[j] = choice[j][s]
        s -= alloc[j]
    alloc[0] = s
    return tuple(alloc), best[t]


def random_curve(
    rng: np.random.Generator,
    horizon: int,
    family: str | None = None,
    *,
    dyadic: bool = False,
) -> RewardCurve:
    """Draw one curve with diminishing returns over ``horizon`` pulls.

    With ``dyadic=True`` only families whose values are sums of multiples of
    ``2**-10`` are used, so sums over short horizons are exact in binary floats.
    """
    exact_families = ("linear", "linear_capped", "constant", "explicit")
    if family is None:
        family = str(rng.choice(exact_families if dyadic else FAMILIES))
    if dyadic and family not in exact_families:
        raise ConfigurationError(f"family {family!r} has no exact dyadic form")
    h = max(horizon, 1)

    if dyadic:
        if family == "linear":
            return RewardCurve.linear(int(rng.integers(0, 65)) / 1024)
        if family == "linear_capped":
            return RewardCurve.linear_capped(int(rng.integers(0, 65)) / 1024, int(rng.integers(1, h + 1)))
        if family == "constant":
            return RewardCurve.constant(int(rng.integers(0, 65)) / 1024)
        n = int(rng.integers(1, h + 1))
        incs = np.sort(rng.integers(0, 65, size=n))[::-1] / 1024
        return RewardCurve.explicit(incs.tolist())

    u = float(rng.uniform(0.05, 1.0))
    if family == "linear":
        return RewardCurve.linear(u / h)
    if family == "linear_capped":
        return RewardCurve.linear_capped(u / h, int(rng.integers(1, h + 1)))
    if family == "constant":
        return RewardCurve.constant(u)
    if family == "sqrt":
        return RewardCurve.sqrt(u / math.sqrt(h))
    if family == "log":
        return RewardCurve.log(u / math.log1p(h))
    if family == "geometric_saturating":
        return RewardCurve.geometric_saturating(u, float(rng.uniform(0.5, 0.999)))
    if family == "explicit":
        n = int(rng.integers(1, h + 1))
        incs = np.sort(rng.uniform(0.0, u / h, size=n))[::-1]
        if rng.random() < 0.3:
            incs[-max(1, n // 3):] = 0.0
        return RewardCurve.explicit(incs.tolist())
    raise ConfigurationError(f"unknown curve family {family!r}")


def random_instance(
    k: int,
    horizon: int,
    rng: np.random.Generator,
    family: str | None = None,
    *,
    dyadic: bool = False,
) -> Instance:
    """``k`` random curves; ``family=None`` or ``"mixed"`` mixes families arm by arm."""
    k = check_natural(k, "k", minimum=1)
    fam = None if family in (None, "mixed") else family
    arms = [random_curve(rng, horizon, fam, dyadic=dyadic) for _ in range(k)]
    return Instance(tuple(arms), horizon)

