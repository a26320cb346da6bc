"""Input validation helpers and shared exceptions."""

from __future__ import annotations

import math
import numbers

import numpy as np

# Absolute slack used wherever float noise from closed-form curves must be absorbed.
FLOAT_TOL = 1e-12


class ConfigurationError(ValueError):
    """Raised when a policy, instance or experiment is configured inconsistently."""


def check_natural(value, name: str, *, minimum: int = 0) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ConfigurationError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < minimum:
        raise ConfigurationError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_nonnegative(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise ConfigurationError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if not math.isfinite(value) or value < 0:
        raise ConfigurationError(f"{name} must be finite and nonnegative, got {value}")
    return value


def check_arm(arm, k: int) -> int:
    arm = check_natural(arm, "arm")
    if arm >= k:
        raise ConfigurationError(f"arm index {arm} out of range for k={k}")
    return arm


def make_rng(seed, *stream: int) -> np.random.Generator:
    """PCG64 generator for ``seed``; ``stream`` selects a fixed, independent substream."""
    seed = check_natural(seed, "seed")
    return np.random.default_rng([seed, *stream]) if stream else np.random.default_rng(seed)


def ceil_log2(x: float) -> int:
    """``ceil(log2(x))`` that does not round up on float noise around exact powers of two."""
    if x <= 0:
        raise ValueError("ceil_log2 needs a positive argument")
    return math.ceil(math.log2(x) - 1e-9)
