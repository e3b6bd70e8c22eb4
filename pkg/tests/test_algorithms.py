"""
Tests for EXP3, Tsallis-INF and UCB1
"""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from src.bandits.algorithms import (
    Exp3Policy,
    Exp3State,
    PolicyKind,
    TsallisInfPolicy,
    TsallisInfState,
    Ucb1Policy,
    Ucb1State,
    create_policy,
    exp3_gamma,
    exp3_probabilities,
    exp3_update,
    solve_tsallis_normalizer,
    tsallis_probabilities,
    tsallis_update,
    ucb1_select,
    ucb1_update,
)
from src.bandits.core import RngStream
from src.bandits.errors import InvalidArgumentError, InvalidProbabilityError


def tsallis_oracle(losses, eta):
    """Probabilities from an independent root finder on the normalisation equation"""
    losses = np.asarray(losses, dtype=float)
    low = losses.min()

    def excess(x):
        return np.sum(4.0 / (eta * (losses - x)) ** 2) - 1.0

    x = brentq(excess, low - 2.0 * math.sqrt(losses.size) / eta - 1.0, low - 1e-12, xtol=1e-15, rtol=1e-15)
    w = 4.0 / (eta * (losses - x)) ** 2
    return w / w.sum()


class TestExp3:
    def test_gamma_clamps_to_one(self):
        assert exp3_gamma(100, 1) == 1.0

    def test_gamma_single_arm(self):
        assert exp3_gamma(1, 1000) == 0.0

    def test_gamma_closed_form(self):
        assert exp3_gamma(256, 10**6) == pytest.approx(0.02874, abs=1e-5)

    def test_gamma_fractional_horizon(self):
        assert exp3_gamma(4, 0.5) == 1.0
        assert exp3_gamma(1, 0.5) == 0.0

    @pytest.mark.parametrize("k,horizon", [(0, 10), (4, 0), (4, -1.0)])
    def test_gamma_invalid(self, k, horizon):
        with pytest.raises(InvalidArgumentError):
            exp3_gamma(k, horizon)

    def test_equal_weights_uniform(self):
        assert np.allclose(exp3_probabilities(Exp3State(k=4, gamma=0.2)), 0.25)

    def test_mixture_without_exploration(self):
        state = Exp3State(k=2, gamma=0.0, log_weights=np.log([3.0, 1.0]))
        assert np.allclose(exp3_probabilities(state), [0.75, 0.25])

    def test_pure_exploration(self):
        state = Exp3State(k=3, gamma=1.0, log_weights=np.array([5.0, -2.0, 0.3]))
        assert np.allclose(exp3_probabilities(state), 1.0 / 3.0)

    def test_update_increment(self):
        state = exp3_update(Exp3State(k=2, gamma=0.1), arm=0, reward=1.0, p_arm=0.5)
        assert state.log_weights[0] == pytest.approx(0.1)
        assert math.exp(state.log_weights[0]) == pytest.approx(1.10517, abs=1e-5)
        assert state.log_weights[1] == 0.0

    def test_zero_reward_is_identity(self):
        state = exp3_update(Exp3State(k=3, gamma=0.3), arm=1, reward=0.0, p_arm=0.4)
        assert np.array_equal(state.log_weights, np.zeros(3))

    def test_zero_probability_rejected(self):
        with pytest.raises(InvalidProbabilityError):
            exp3_update(Exp3State(k=2, gamma=0.1), arm=0, reward=1.0, p_arm=0.0)

    def test_huge_log_weights_stay_finite(self):
        """A log weight of 1e7 next to zeros keeps a finite, floored mixture"""
        state = Exp3State(k=3, gamma=0.05)
        state.log_weights[0] = 1e7
        probs = exp3_probabilities(state)
        assert np.all(np.isfinite(probs))
        assert probs.sum() == pytest.approx(1.0, abs=1e-9)
        assert probs.min() >= state.gamma / state.k - 1e-15

    def test_policy_floor(self):
        policy = Exp3Policy(4, RngStream(1), gamma=0.2)
        for _ in range(500):
            arm = policy.select()
            policy.update(arm, 1.0 if arm == 2 else 0.0)
            assert policy.probabilities().min() >= 0.05 - 1e-12


class TestTsallisInf:
    def test_symmetric_two_arms(self):
        assert np.allclose(tsallis_probabilities(TsallisInfState(k=2)), [0.5, 0.5])

    @pytest.mark.parametrize("t", [1, 7, 1000])
    def test_equal_losses_uniform(self, t):
        state = TsallisInfState(k=4, cumulative_loss_estimates=np.full(4, 3.5), t=t)
        assert np.allclose(tsallis_probabilities(state), 0.25, atol=1e-12)

    def test_large_loss_gap_unit_scale(self):
        state = TsallisInfState(k=2, cumulative_loss_estimates=np.array([0.0, 100.0]), t=100)
        probs = tsallis_probabilities(state)
        assert probs == pytest.approx(tsallis_oracle([0.0, 100.0], 0.1), abs=1e-9)
        assert 0.97 < probs[0] < 0.975

    def test_large_loss_gap_double_scale(self):
        state = TsallisInfState(k=2, cumulative_loss_estimates=np.array([0.0, 100.0]), t=100, eta_scale=2.0)
        probs = tsallis_probabilities(state)
        assert probs == pytest.approx(tsallis_oracle([0.0, 100.0], 0.2), abs=1e-9)
        assert probs[0] > 0.99

    @given(
        st.lists(st.floats(min_value=0.0, max_value=1e4), min_size=2, max_size=12),
        st.integers(min_value=1, max_value=10**6),
    )
    @settings(max_examples=200, deadline=None)
    def test_stationarity_residual(self, losses, t):
        state = TsallisInfState(k=len(losses), cumulative_loss_estimates=np.asarray(losses), t=t)
        probs = tsallis_probabilities(state)
        assert np.all(probs > 0)
        assert probs.sum() == pytest.approx(1.0, abs=1e-9)
        shifted = state.cumulative_loss_estimates - state.cumulative_loss_estimates.min()
        residual = np.sum(4.0 / (state.eta * (shifted - state.normalizer)) ** 2) - 1.0
        assert abs(residual) <= 1e-9

    @given(
        st.lists(st.floats(min_value=0.0, max_value=500.0), min_size=2, max_size=8),
        st.floats(min_value=0.0, max_value=1e3),
    )
    @settings(max_examples=100, deadline=None)
    def test_translation_invariance(self, losses, shift):
        base = tsallis_probabilities(TsallisInfState(k=len(losses), cumulative_loss_estimates=np.asarray(losses), t=9))
        moved = tsallis_probabilities(
            TsallisInfState(k=len(losses), cumulative_loss_estimates=np.asarray(losses) + shift, t=9)
        )
        assert np.max(np.abs(base - moved)) < 1e-9

    def test_solver_matches_oracle(self):
        losses = np.array([3.0, 0.5, 12.0, 0.5, 40.0])
        _, w = solve_tsallis_normalizer(losses, eta=0.3)
        assert w / w.sum() == pytest.approx(tsallis_oracle(losses, 0.3), abs=1e-9)

    def test_warm_start_is_accepted(self):
        losses = np.array([0.0, 2.0, 5.0])
        cold, _ = solve_tsallis_normalizer(losses, eta=0.5)
        warm, _ = solve_tsallis_normalizer(losses, eta=0.5, start=cold * 1.01)
        assert warm == pytest.approx(cold, rel=1e-9)

    def test_update_full_reward(self):
        state = tsallis_update(TsallisInfState(k=3), arm=1, reward=1.0, p_arm=0.3)
        assert np.array_equal(state.cumulative_loss_estimates, np.zeros(3))
        assert state.t == 2

    def test_update_zero_reward(self):
        state = tsallis_update(TsallisInfState(k=3), arm=2, reward=0.0, p_arm=0.25)
        assert state.cumulative_loss_estimates[2] == pytest.approx(4.0)

    def test_update_zero_probability(self):
        with pytest.raises(InvalidProbabilityError):
            tsallis_update(TsallisInfState(k=2), arm=0, reward=0.5, p_arm=0.0)

    def test_symmetric_alternation(self):
        state = TsallisInfState(k=2)
        for round_index in range(20):
            arm = round_index % 2
            tsallis_update(state, arm, reward=0.3, p_arm=0.5)
            if arm == 1:
                assert np.allclose(tsallis_probabilities(state), [0.5, 0.5])


class TestUcb1:
    def test_unvisited_arm_first(self):
        state = Ucb1State(k=2, counts=np.array([0, 5]), mean_estimates=np.array([0.1, 0.9]), t=5)
        assert ucb1_select(state) == 0

    def test_higher_mean_wins_with_equal_bonus(self):
        state = Ucb1State(k=2, counts=np.array([10, 10]), mean_estimates=np.array([0.9, 0.1]), t=20)
        assert ucb1_select(state) == 0

    def test_ties_break_low(self):
        state = Ucb1State(k=3, counts=np.array([4, 4, 4]), mean_estimates=np.full(3, 0.5), t=12)
        assert ucb1_select(state) == 0

    def test_first_update(self):
        state = ucb1_update(Ucb1State(k=2), arm=1, reward=0.7)
        assert state.mean_estimates[1] == pytest.approx(0.7)
        assert state.counts[1] == 1

    def test_running_mean(self):
        state = Ucb1State(k=1, counts=np.array([1]), mean_estimates=np.array([0.5]), t=1)
        ucb1_update(state, arm=0, reward=1.0)
        assert state.mean_estimates[0] == pytest.approx(0.75)
        assert state.counts[0] == 2

    def test_bernoulli_mean_converges(self):
        rng = RngStream(31)
        state = Ucb1State(k=1)
        for _ in range(1000):
            ucb1_update(state, 0, 1.0 if rng.uniform() < 0.3 else 0.0)
        assert abs(state.mean_estimates[0] - 0.3) < 0.05
        assert state.counts.sum() == state.t

    def test_select_consumes_no_randomness(self):
        policy = Ucb1Policy(3, RngStream(0))
        for reward in (0.2, 0.8, 0.5, 0.9):
            arm = policy.select()
            policy.update(arm, reward)
        assert policy.rng.draws == 0

    def test_probabilities_are_one_hot(self):
        policy = Ucb1Policy(4, RngStream(0))
        probs = policy.probabilities()
        assert probs.sum() == 1.0
        assert probs[0] == 1.0


@pytest.mark.parametrize("kind", list(PolicyKind))
def test_single_arm_policy(kind):
    policy = create_policy(kind, 1, 100, RngStream(3))
    for _ in range(10):
        assert policy.select() == 0
        policy.update(0, 0.4)
    assert policy.rng.draws == 0


def test_create_policy_uses_horizon_gamma():
    policy = create_policy(PolicyKind.EXP3, 16, 62_500, RngStream(0))
    assert policy.state.gamma == pytest.approx(0.02032, abs=1e-5)


@pytest.mark.parametrize("kind", list(PolicyKind))
def test_probabilities_stay_normalised(kind):
    rng = RngStream(12)
    policy = create_policy(kind, 6, 5000, rng.derive("policy"))
    rewards = rng.derive("rewards")
    for _ in range(3000):
        arm = policy.select()
        policy.update(arm, rewards.uniform() * (0.5 + 0.1 * arm))
        probs = policy.probabilities()
        assert abs(probs.sum() - 1.0) <= 1e-9
        assert np.all(probs >= 0)


def _replay_probabilities(policy_factory, order, arms, rewards):
    """Feed a fixed (arm, reward) sequence under a relabelling and return final probabilities"""
    k = len(order)
    policy = policy_factory(k)
    inverse = np.argsort(order)
    for arm, reward in zip(arms, rewards):
        # the relabelled policy sees arm a under the label inverse[a]
        label = int(inverse[arm])
        if isinstance(policy, (Exp3Policy, TsallisInfPolicy)):
            policy._p_selected = float(policy.probabilities()[label])
        policy.update(label, reward)
    return policy.probabilities()


@pytest.mark.parametrize("factory", [
    lambda k: Exp3Policy(k, RngStream(0), gamma=0.1),
    lambda k: TsallisInfPolicy(k, RngStream(0)),
    lambda k: Ucb1Policy(k, RngStream(0)),
])
def test_relabelling_equivariance(factory):
    k = 4
    # cyclic pulls with small losses keep importance-weighted estimates bounded off-policy
    arms = [i % k for i in range(40)]
    # distinct per-arm rewards keep UCB1 away from index ties
    rewards = [0.99 - 0.01 * a - 0.0001 * i for i, a in enumerate(arms)]
    identity = _replay_probabilities(factory, list(range(k)), arms, rewards)
    for order in itertools.permutations(range(k)):
        relabelled = _replay_probabilities(factory, list(order), arms, rewards)
        inverse = np.argsort(order)
        assert np.allclose(relabelled[inverse], identity, atol=1e-10)


@pytest.mark.slow
class TestLongRuns:
    @pytest.mark.parametrize("kind", list(PolicyKind))
    def test_normalised_over_a_million_steps(self, kind):
        steps = 10**6
        rng = RngStream(99)
        policy = create_policy(kind, 6, steps, rng.derive("policy"))
        rewards = rng.derive("rewards").generator.random(steps)
        worst = 0.0
        for t in range(steps):
            arm = policy.select()
            policy.update(arm, float(rewards[t]) * (0.5 + 0.1 * arm))
            probs = policy.probabilities()
            worst = max(worst, abs(probs.sum() - 1.0))
            assert probs.min() >= 0
        assert worst <= 1e-9

    def test_exp3_ten_million_reward_one_updates(self):
        state = Exp3State(k=3, gamma=0.05)
        for step in range(10**7):
            probs = exp3_probabilities(state)
            exp3_update(state, arm=0, reward=1.0, p_arm=float(probs[0]))
            if step % 100_000 == 0:
                assert np.all(np.isfinite(probs))
        probs = exp3_probabilities(state)
        assert np.all(np.isfinite(state.log_weights))
        assert np.all(np.isfinite(probs))
        assert probs.sum() == pytest.approx(1.0, abs=1e-9)
        assert probs.min() >= state.gamma / state.k - 1e-15
        assert probs[0] == pytest.approx(1.0 - state.gamma + state.gamma / state.k)
