import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from improving_bandits._validation import ConfigurationError
from improving_bandits.adversary import (
    HardInstanceSpec,
    decoy_instance,
    estimate_ratio,
    generous_game_deterministic_bound,
    generous_game_value,
    hard_instance,
    lower_bound_ceiling,
    run_against_decoys,
    sqrt_ceil,
)
from improving_bandits.curves import eval_curve, opt_arm, prefix_reward, validate_curve
from improving_bandits.environment import BanditEnvironment, PullTrace, replay
from improving_bandits.policies import always_pull, make_policy, uniform_baseline


def decoy_trace(arms, k=4, T=8):
    return replay(decoy_instance(k, T), arms, T)


class TestHardInstance:
    def test_k4_T8(self):
        inst = hard_instance(HardInstanceSpec(4, 8, 1))
        assert [eval_curve(inst.arms[1], t) for t in (1, 4, 8)] == [0.125, 0.5, 1.0]
        for i in (0, 2, 3):
            assert [eval_curve(inst.arms[i], t) for t in (1, 4, 5, 8)] == [0.125, 0.5, 0.5, 0.5]

    def test_single_arm(self):
        spec = HardInstanceSpec(1, 10, 0)
        inst = hard_instance(spec)
        assert opt_arm(inst, 10)[1] == pytest.approx(spec.opt) == 5.5

    @pytest.mark.parametrize("k,T", [(4, 8), (16, 64), (9, 27), (5, 30), (100, 10000)])
    def test_arms_validate(self, k, T):
        for curve in hard_instance(HardInstanceSpec(k, T, k - 1)).arms:
            assert validate_curve(curve, T) is None

    def test_non_square_uses_ceiling(self):
        spec = HardInstanceSpec(5, 30, 0)
        assert spec.s == 3 and spec.cap == 10
        assert sqrt_ceil(16) == 4 and sqrt_ceil(17) == 5

    def test_divisibility(self):
        with pytest.raises(ConfigurationError):
            HardInstanceSpec(4, 7, 0)
        with pytest.raises(ConfigurationError):
            HardInstanceSpec(4, 8, 4)

    @pytest.mark.parametrize("k,c", [(4, 2), (16, 1), (64, 3), (100, 1)])
    def test_opt_at_least_half_T(self, k, c):
        T = c * k * sqrt_ceil(k)
        spec = HardInstanceSpec(k, T, 0)
        assert opt_arm(hard_instance(spec), T)[1] >= T / 2


class TestGenerousGame:
    def test_even_split_not_granted(self):
        tr = decoy_trace([0, 1, 2, 3] * 2)
        for i in range(4):
            out = generous_game_value(tr, HardInstanceSpec(4, 8, i))
            assert not out.granted_opt and out.final_reward == out.base_reward == pytest.approx(1.5)

    def test_one_arm_granted(self):
        tr = decoy_trace([0] * 8)
        out = generous_game_value(tr, HardInstanceSpec(4, 8, 0))
        assert out.granted_opt and out.final_reward == 4.5

    def test_other_arm_keeps_base(self):
        tr = decoy_trace([0] * 8)
        out = generous_game_value(tr, HardInstanceSpec(4, 8, 1))
        assert not out.granted_opt and out.final_reward == 3.25

    def test_exactly_cap_pulls_not_granted(self):
        tr = decoy_trace([0] * 4 + [1] * 4)
        assert not generous_game_value(tr, HardInstanceSpec(4, 8, 0)).granted_opt

    def test_expectations(self):
        assert generous_game_deterministic_bound(decoy_trace([0] * 8), 4, 8) == pytest.approx(3.5625)
        assert generous_game_deterministic_bound(decoy_trace([0, 1, 2, 3] * 2), 4, 8) == pytest.approx(1.5)
        assert 3.5625 <= lower_bound_ceiling(4, 8) == 6.75

    def test_single_arm_expectation_is_opt(self):
        tr = replay(decoy_instance(1, 12), [0] * 12, 12)
        assert generous_game_deterministic_bound(tr, 1, 12) == HardInstanceSpec(1, 12).opt


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), s=st.integers(1, 6), c=st.integers(1, 4), i=st.integers(0, 35))
def test_generous_dominates_true_reward(seed, s, c, i):
    k = s * s
    T = c * s * k
    i_star = i % k
    rng = np.random.default_rng(seed)
    # any sequence: a few long runs plus noise
    arms = np.concatenate([np.full(int(rng.integers(0, T)), rng.integers(k)), rng.integers(k, size=T)])[:T]
    on_decoys = replay(decoy_instance(k, T), arms, T)
    on_real = replay(hard_instance(HardInstanceSpec(k, T, i_star)), arms, T)
    out = generous_game_value(on_decoys, HardInstanceSpec(k, T, i_star))
    assert out.final_reward >= on_real.total_reward() - 1e-12
    # at most s arms can be pulled more than T/s times
    assert (np.bincount(arms, minlength=k) > T // s).sum() <= s


@pytest.mark.parametrize("k", [4, 16, 64, 100])
def test_deterministic_ceiling_small_T(k):
    T = 2 * k
    for name in ("always_pull:0", "uniform_baseline"):
        tr = run_against_decoys(make_policy(name), k, T)
        assert generous_game_deterministic_bound(tr, k, T) <= lower_bound_ceiling(k, T)


class TestEstimateRatio:
    def test_always_pull_closed_form(self):
        k, T, trials = 4, 8, 4000
        est = estimate_ratio(make_policy("always_pull:0"), k, T, trials, seed=3)
        spec = HardInstanceSpec(k, T)
        decoy = prefix_reward(decoy_instance(k, T).arms[0], T)
        expected = spec.opt / k + (1 - 1 / k) * decoy
        sd = math.sqrt((1 / k) * (1 - 1 / k)) * (spec.opt - decoy)
        assert abs(est.alg_mean - expected) <= 4 * sd / math.sqrt(trials)

    def test_single_arm_ratio_one(self):
        est = estimate_ratio(make_policy("always_pull:0"), 1, 20, 5)
        assert est.ratio_mean == 1 and est.ratio_ci == (1, 1)

    def test_uniform_closed_form(self):
        # each of the 4 arms gets 2 pulls worth 1/8 + 2/8 whichever arm is hidden
        est = estimate_ratio(make_policy("uniform_baseline"), 4, 8, 10)
        assert est.alg_mean == pytest.approx(1.5)
        assert est.ratio_mean == pytest.approx(3.0)

    def test_hidden_mode_for_doubling(self):
        est = estimate_ratio(make_policy("doubling"), 4, 64, 20, hidden=True)
        assert 0 < est.alg_mean <= est.opt
