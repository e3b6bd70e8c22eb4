"""
Flat bandit policies: EXP3, Tsallis-INF and UCB1

Each algorithm is a small state dataclass plus functions that read or advance it,
wrapped by a ``BanditPolicy`` subclass that owns the random stream and remembers the
selection-time probability needed for importance weighting.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from src.bandits.core import (
    BanditPolicy,
    RngStream,
    check_reward,
    loss_from_reward,
    sample_categorical,
)
from src.bandits.errors import (
    InvalidArgumentError,
    InvalidProbabilityError,
    NumericalFailureError,
)

UCB1_ALPHA = math.sqrt(2.0)
TSALLIS_MAX_ITER = 200
TSALLIS_TOLERANCE = 1e-12


class PolicyKind(str, Enum):
    """Flat algorithms usable as parent or child"""
    EXP3 = "exp3"
    TSALLIS_INF = "tsallis_inf"
    UCB1 = "ucb1"


# ---------------------------------------------------------------------------
# EXP3
# ---------------------------------------------------------------------------

def exp3_gamma(k: int, horizon: float) -> float:
    """Exploration rate min(1, sqrt(k ln k / ((e - 1) T)))"""
    if k < 1:
        raise InvalidArgumentError(f"exp3_gamma needs k >= 1, got k={k}")
    if k == 1:
        return 0.0
    if horizon <= 0:
        raise InvalidArgumentError(f"exp3_gamma needs horizon > 0, got horizon={horizon}")
    return min(1.0, math.sqrt(k * math.log(k) / ((math.e - 1.0) * horizon)))


@dataclass
class Exp3State:
    k: int
    gamma: float
    log_weights: np.ndarray = None

    def __post_init__(self):
        if not (0.0 <= self.gamma <= 1.0):
            raise InvalidArgumentError(f"gamma must lie in [0, 1], got {self.gamma}")
        if self.log_weights is None:
            self.log_weights = np.zeros(self.k)


def exp3_probabilities(state: Exp3State) -> np.ndarray:
    """Mixture (1 - gamma) * w / sum(w) + gamma / k, evaluated in the log domain"""
    lw = state.log_weights
    w = np.exp(lw - lw.max())
    return (1.0 - state.gamma) * w / w.sum() + state.gamma / state.k


def exp3_update(state: Exp3State, arm: int, reward: float, p_arm: float) -> Exp3State:
    """Importance-weighted exponential update of the pulled arm (in place)"""
    if p_arm <= 0:
        raise InvalidProbabilityError(f"selection probability must be positive, got {p_arm}")
    state.log_weights[arm] += state.gamma * (reward / p_arm) / state.k
    return state


# ---------------------------------------------------------------------------
# Tsallis-INF (1/2-Tsallis entropy, plain importance-weighted losses)
# ---------------------------------------------------------------------------

@dataclass
class TsallisInfState:
    k: int
    cumulative_loss_estimates: np.ndarray = None
    t: int = 1
    eta_scale: float = 1.0
    # last normaliser relative to min(L), used as a warm start
    normalizer: Optional[float] = field(default=None, repr=False)

    def __post_init__(self):
        if self.cumulative_loss_estimates is None:
            self.cumulative_loss_estimates = np.zeros(self.k)
        if self.t < 1:
            raise InvalidArgumentError(f"round counter starts at 1, got {self.t}")
        if self.eta_scale <= 0:
            raise InvalidArgumentError(f"eta_scale must be positive, got {self.eta_scale}")

    @property
    def eta(self) -> float:
        return self.eta_scale / math.sqrt(self.t)


def tsallis_weights(losses: np.ndarray, eta: float, x: float) -> np.ndarray:
    """Unnormalised weights 4 (eta (L_i - x))^-2"""
    return 4.0 / (eta * (losses - x)) ** 2


def solve_tsallis_normalizer(
    losses: np.ndarray,
    eta: float,
    start: Optional[float] = None,
    max_iter: int = TSALLIS_MAX_ITER,
    tol: float = TSALLIS_TOLERANCE,
) -> Tuple[float, np.ndarray]:
    """Find x < min(L) with sum_i 4 (eta (L_i - x))^-2 = 1.

    Safeguarded Newton on the increasing convex map x -> sum - 1, falling back to
    bisection whenever a step leaves the bracket. Works on losses shifted so the
    smallest is 0; returns the shifted normaliser and the weights.
    """
    k = losses.size
    shifted = losses - losses.min()
    lo = -2.0 * math.sqrt(k) / eta
    hi = -1e-12
    x = start if start is not None and lo < start < hi else lo
    for _ in range(max_iter):
        gap = shifted - x
        w = 4.0 / (eta * gap) ** 2
        f = w.sum() - 1.0
        if abs(f) <= tol:
            return x, w
        if f < 0:
            lo = x
        else:
            hi = x
        if hi - lo <= 4.0 * np.finfo(float).eps * max(1.0, abs(x)):
            if abs(f) <= 1e-9:
                return x, w
            break
        slope = np.sum(2.0 * w / gap)
        candidate = x - f / slope
        x = candidate if lo < candidate < hi else 0.5 * (lo + hi)
    raise NumericalFailureError(
        f"Tsallis-INF normaliser did not converge in {max_iter} iterations (k={k}, eta={eta})"
    )


def tsallis_probabilities(state: TsallisInfState) -> np.ndarray:
    losses = state.cumulative_loss_estimates
    x, w = solve_tsallis_normalizer(losses, state.eta, start=state.normalizer)
    state.normalizer = x
    return w / w.sum()


def tsallis_update(state: TsallisInfState, arm: int, reward: float, p_arm: float) -> TsallisInfState:
    """Add the importance-weighted loss (1 - reward) / p_arm and advance the round"""
    if p_arm <= 0:
        raise InvalidProbabilityError(f"selection probability must be positive, got {p_arm}")
    state.cumulative_loss_estimates[arm] += loss_from_reward(reward) / p_arm
    state.t += 1
    return state


# ---------------------------------------------------------------------------
# UCB1
# ---------------------------------------------------------------------------

@dataclass
class Ucb1State:
    k: int
    alpha: float = UCB1_ALPHA
    counts: np.ndarray = None
    mean_estimates: np.ndarray = None
    t: int = 0

    def __post_init__(self):
        if self.counts is None:
            self.counts = np.zeros(self.k, dtype=np.int64)
        if self.mean_estimates is None:
            self.mean_estimates = np.zeros(self.k)


def ucb1_select(state: Ucb1State) -> int:
    unvisited = np.flatnonzero(state.counts == 0)
    if unvisited.size:
        return int(unvisited[0])
    index = state.mean_estimates + state.alpha * np.sqrt(math.log(state.t) / state.counts)
    return int(np.argmax(index))


def ucb1_update(state: Ucb1State, arm: int, reward: float) -> Ucb1State:
    state.counts[arm] += 1
    state.mean_estimates[arm] += (reward - state.mean_estimates[arm]) / state.counts[arm]
    state.t += 1
    return state


# ---------------------------------------------------------------------------
# Policy wrappers
# ---------------------------------------------------------------------------

class Exp3Policy(BanditPolicy):
    name = PolicyKind.EXP3.value

    def __init__(self, k: int, rng: RngStream, gamma: float):
        super().__init__(k, rng)
        self.state = Exp3State(k=k, gamma=gamma)
        self._p_selected = 1.0

    def probabilities(self) -> np.ndarray:
        self.work += self.k
        return exp3_probabilities(self.state)

    def select(self) -> int:
        if self.k == 1:
            self.work += 1
            self._p_selected = 1.0
            return 0
        probs = self.probabilities()
        arm = sample_categorical(probs, self.rng)
        self._p_selected = float(probs[arm])
        return arm

    def update(self, arm: int, reward: float) -> None:
        exp3_update(self.state, arm, check_reward(reward), self._p_selected)

    def state_arrays(self):
        return (self.state.log_weights,)


class TsallisInfPolicy(BanditPolicy):
    name = PolicyKind.TSALLIS_INF.value

    def __init__(self, k: int, rng: RngStream, eta_scale: float = 1.0):
        super().__init__(k, rng)
        self.state = TsallisInfState(k=k, eta_scale=eta_scale)
        self._p_selected = 1.0

    def probabilities(self) -> np.ndarray:
        self.work += self.k
        if self.k == 1:
            return np.ones(1)
        return tsallis_probabilities(self.state)

    def select(self) -> int:
        if self.k == 1:
            self.work += 1
            self._p_selected = 1.0
            return 0
        probs = self.probabilities()
        arm = sample_categorical(probs, self.rng)
        self._p_selected = float(probs[arm])
        return arm

    def update(self, arm: int, reward: float) -> None:
        tsallis_update(self.state, arm, check_reward(reward), self._p_selected)

    def state_arrays(self):
        return (self.state.cumulative_loss_estimates, np.array([self.state.t]))


class Ucb1Policy(BanditPolicy):
    name = PolicyKind.UCB1.value

    def __init__(self, k: int, rng: RngStream, alpha: float = UCB1_ALPHA):
        super().__init__(k, rng)
        self.state = Ucb1State(k=k, alpha=alpha)

    def probabilities(self) -> np.ndarray:
        """One-hot vector on the arm UCB1 would pick now"""
        probs = np.zeros(self.k)
        probs[self.select()] = 1.0
        return probs

    def select(self) -> int:
        self.work += self.k
        return ucb1_select(self.state)

    def update(self, arm: int, reward: float) -> None:
        ucb1_update(self.state, arm, check_reward(reward))

    def state_arrays(self):
        return (self.state.counts, self.state.mean_estimates)


def create_policy(
    kind: PolicyKind,
    k: int,
    horizon: float,
    rng: RngStream,
    ucb_alpha: float = UCB1_ALPHA,
    tsallis_eta_scale: float = 1.0,
) -> BanditPolicy:
    """Build a flat policy; EXP3 gets gamma(k, horizon)"""
    kind = PolicyKind(kind)
    if kind is PolicyKind.EXP3:
        return Exp3Policy(k, rng, gamma=exp3_gamma(k, horizon))
    if kind is PolicyKind.TSALLIS_INF:
        return TsallisInfPolicy(k, rng, eta_scale=tsallis_eta_scale)
    return Ucb1Policy(k, rng, alpha=ucb_alpha)
