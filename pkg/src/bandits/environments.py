"""
Reward environments: stochastic gap, phased adversarial, metric (traveling optimum),
clustered gap and trace replay.

Every environment is an oblivious adversary: ``begin_round`` fixes the full mean and
reward vectors for the round before ``pull`` learns which arm was played.
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from src.bandits.core import RngStream, check_reward
from src.bandits.errors import (
    DataError,
    DomainError,
    InvalidArgumentError,
    OutOfRangeError,
    RewardRangeError,
    TraceFormatError,
)

DOMAIN_TOLERANCE = 1e-12


class RewardKind(str, Enum):
    """How a realised reward is drawn around its mean"""
    BERNOULLI = "bernoulli"
    UNIFORM = "uniform"
    EXACT = "exact"


# ---------------------------------------------------------------------------
# Mean constructions
# ---------------------------------------------------------------------------

def stochastic_gap_means(k: int, delta: float, best: int = 0) -> np.ndarray:
    """(1 + delta) / 2 on the best arm, (1 - delta) / 2 elsewhere"""
    if not (0.0 <= delta <= 1.0):
        raise RewardRangeError(f"gap delta must lie in [0, 1], got {delta}")
    if not (0 <= best < k):
        raise InvalidArgumentError(f"best arm {best} outside [0, {k})")
    means = np.full(k, (1.0 - delta) / 2.0)
    means[best] = (1.0 + delta) / 2.0
    return means


def phase_index(t: int, base_phase: int) -> int:
    """Phase m covers steps [base (2^m - 1), base (2^(m+1) - 1))"""
    if t < 0:
        raise InvalidArgumentError(f"step must be non-negative, got {t}")
    if base_phase < 1:
        raise InvalidArgumentError(f"base phase length must be >= 1, got {base_phase}")
    return (t // base_phase + 1).bit_length() - 1


def phased_adversarial_means(t: int, delta: float, best: int, base_phase: int, k: int = 2) -> np.ndarray:
    """Optimal/suboptimal means alternate between (delta, 0) and (1, 1 - delta)"""
    if not (0.0 <= delta <= 1.0):
        raise RewardRangeError(f"gap delta must lie in [0, 1], got {delta}")
    if not (0 <= best < k):
        raise InvalidArgumentError(f"best arm {best} outside [0, {k})")
    if phase_index(t, base_phase) % 2 == 0:
        optimal, suboptimal = delta, 0.0
    else:
        optimal, suboptimal = 1.0, 1.0 - delta
    means = np.full(k, suboptimal)
    means[best] = optimal
    return means


def clustered_gap_means(p: int, m: int, L: float, l: float, mu_star: float) -> np.ndarray:
    """Cluster 0 spans [mu* - l, mu*]; every other cluster spans [mu* - L - l, mu* - L]"""
    if p < 1 or m < 1:
        raise InvalidArgumentError(f"need p >= 1 and m >= 1, got p={p}, m={m}")
    if L < 0 or l < 0:
        raise InvalidArgumentError(f"gaps must be non-negative, got L={L}, l={l}")
    if mu_star > 1.0 or mu_star - L - l < 0.0:
        raise RewardRangeError(
            f"infeasible clustered means: mu*={mu_star}, L={L}, l={l} leave [0, 1]"
        )
    if m == 1:
        best_block = np.array([mu_star])
    else:
        best_block = np.linspace(mu_star - l, mu_star, m)
    blocks = [best_block] + [best_block - L] * (p - 1)
    return np.clip(np.concatenate(blocks), 0.0, 1.0)


# ---------------------------------------------------------------------------
# Metric space
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ArmGrid:
    """k arms on an endpoint-inclusive lattice in Q = [0, 1/sqrt(d)]^d.

    Arm index i maps to lattice coordinates ``np.unravel_index(i, (n,) * d)``.
    """
    k: int
    d: int

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise InvalidArgumentError(f"dimension must be 1, 2 or 3, got {self.d}")
        if self.k < 1:
            raise InvalidArgumentError(f"need at least one arm, got {self.k}")
        if self.side ** self.d != self.k:
            raise InvalidArgumentError(f"k={self.k} is not a perfect power for d={self.d}")

    @property
    def side(self) -> int:
        return int(round(self.k ** (1.0 / self.d)))

    @property
    def extent(self) -> float:
        return 1.0 / math.sqrt(self.d)

    @property
    def spacing(self) -> float:
        return self.extent / (self.side - 1) if self.side > 1 else 0.0

    @property
    def center(self) -> np.ndarray:
        return np.full(self.d, self.extent / 2.0)

    @property
    def positions(self) -> np.ndarray:
        coords = np.stack(np.unravel_index(np.arange(self.k), (self.side,) * self.d), axis=1)
        return coords * self.spacing

    def contains(self, point: np.ndarray) -> bool:
        point = np.asarray(point, dtype=float)
        return bool(
            point.shape == (self.d,)
            and np.all(point >= -DOMAIN_TOLERANCE)
            and np.all(point <= self.extent + DOMAIN_TOLERANCE)
        )


def _check_in_cube(point: np.ndarray, d: int, name: str):
    extent = 1.0 / math.sqrt(d)
    if np.any(point < -DOMAIN_TOLERANCE) or np.any(point > extent + DOMAIN_TOLERANCE):
        raise DomainError(f"{name} {point.tolist()} outside [0, {extent:.6f}]^{d}")


def traveling_means(positions: np.ndarray, a_star: np.ndarray) -> np.ndarray:
    """1 - ||a* - x_i|| for every row of ``positions``"""
    distances = np.linalg.norm(positions - a_star, axis=1)
    return np.clip(1.0 - distances, 0.0, 1.0)


def traveling_mean(position, a_star) -> float:
    position = np.atleast_1d(np.asarray(position, dtype=float))
    a_star = np.atleast_1d(np.asarray(a_star, dtype=float))
    if position.shape != a_star.shape:
        raise DomainError(f"dimension mismatch: {position.shape} vs {a_star.shape}")
    d = position.size
    _check_in_cube(position, d, "position")
    _check_in_cube(a_star, d, "optimum")
    return float(traveling_means(position[None, :], a_star)[0])


@dataclass(frozen=True)
class TravelingState:
    a_star: np.ndarray
    sigma: float

    @property
    def d(self) -> int:
        return int(np.asarray(self.a_star).size)

    def moved(self, increment: np.ndarray) -> "TravelingState":
        """Apply a random-walk increment and clip back into Q"""
        extent = 1.0 / math.sqrt(self.d)
        a_star = np.clip(np.asarray(self.a_star, dtype=float) + increment, 0.0, extent)
        return TravelingState(a_star=a_star, sigma=self.sigma)


def random_walk_advance(state: TravelingState, rng: RngStream) -> TravelingState:
    """a*(t+1) = clip_Q(a*(t) + n), n ~ N(0, sigma^2 I)"""
    if state.sigma == 0:
        return state
    return state.moved(rng.normal(state.sigma, state.d))


# ---------------------------------------------------------------------------
# Reward draws
# ---------------------------------------------------------------------------

def _check_support(means: np.ndarray, kind: RewardKind, width: float):
    if np.any(means < 0.0) or np.any(means > 1.0) or not np.all(np.isfinite(means)):
        raise RewardRangeError(f"mean outside [0, 1]: {means[(means < 0) | (means > 1)][:5].tolist()}")
    if kind is RewardKind.UNIFORM:
        if width < 0:
            raise RewardRangeError(f"uniform width must be non-negative, got {width}")
        half = width / 2.0
        if np.any(means - half < -DOMAIN_TOLERANCE) or np.any(means + half > 1.0 + DOMAIN_TOLERANCE):
            raise RewardRangeError(f"uniform support of width {width} leaves [0, 1]")


def draw_rewards(means: np.ndarray, kind: RewardKind, width: float, rng: RngStream) -> np.ndarray:
    """Realised reward vector for one round"""
    kind = RewardKind(kind)
    means = np.asarray(means, dtype=float)
    _check_support(means, kind, width)
    if kind is RewardKind.EXACT:
        return means.copy()
    u = rng.uniforms(means.size)
    if kind is RewardKind.BERNOULLI:
        return (u < means).astype(float)
    return np.clip(means + width * (u - 0.5), 0.0, 1.0)


def draw_reward(mean: float, kind: RewardKind, width: float, rng: RngStream) -> float:
    return float(draw_rewards(np.array([mean]), kind, width, rng)[0])


# ---------------------------------------------------------------------------
# Reward traces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RewardTrace:
    times: np.ndarray
    rewards: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times)
        rewards = np.asarray(self.rewards, dtype=float)
        if times.ndim != 1 or times.size < 2:
            raise TraceFormatError("a trace needs at least two sample rows")
        if rewards.shape[0] != times.size or rewards.ndim != 2 or rewards.shape[1] < 1:
            raise TraceFormatError(f"reward matrix shape {rewards.shape} does not match {times.size} samples")
        if np.any(np.diff(times) <= 0):
            raise TraceFormatError("sample times must be strictly increasing")
        if np.any(rewards < 0) or np.any(rewards > 1) or not np.all(np.isfinite(rewards)):
            raise TraceFormatError("trace rewards must lie in [0, 1]")

    @property
    def k(self) -> int:
        return int(np.asarray(self.rewards).shape[1])

    @property
    def first(self) -> int:
        return int(self.times[0])

    @property
    def last(self) -> int:
        return int(self.times[-1])

    def means_at(self, t: float) -> np.ndarray:
        """Per-arm linear interpolation at time t"""
        if not (self.first <= t <= self.last):
            raise OutOfRangeError(f"time {t} outside recorded range [{self.first}, {self.last}]")
        times = np.asarray(self.times, dtype=float)
        rewards = np.asarray(self.rewards, dtype=float)
        right = int(np.searchsorted(times, t, side="left"))
        if times[right] == t:
            return rewards[right].copy()
        left = right - 1
        weight = (t - times[left]) / (times[right] - times[left])
        return (1.0 - weight) * rewards[left] + weight * rewards[right]


def trace_mean(trace: RewardTrace, t: float, arm: int) -> float:
    if not (0 <= arm < trace.k):
        raise OutOfRangeError(f"arm {arm} outside [0, {trace.k})")
    return float(trace.means_at(t)[arm])


# ---------------------------------------------------------------------------
# Environments
# ---------------------------------------------------------------------------

@dataclass
class RoundOutcome:
    means: np.ndarray
    rewards: np.ndarray


class Environment(ABC):
    """Reward generator over k arms driven by its own random stream"""

    kind: str = "environment"

    def __init__(self, k: int, rng: RngStream, reward_kind: RewardKind = RewardKind.BERNOULLI,
                 reward_width: float = 0.0):
        self.k = int(k)
        self.rng = rng
        self.reward_kind = RewardKind(reward_kind)
        self.reward_width = float(reward_width)
        self._round: Optional[RoundOutcome] = None
        self._t = -1

    @abstractmethod
    def mean_vector(self, t: int) -> np.ndarray:
        """Mean rewards of all arms at step t"""

    def _close_round(self, t: int):
        """Hook run after the arm for step t was pulled"""

    def begin_round(self, t: int) -> RoundOutcome:
        if self._round is not None:
            raise DataError(f"round {self._t} is still open")
        means = self.mean_vector(t)
        rewards = draw_rewards(means, self.reward_kind, self.reward_width, self.rng)
        self._round = RoundOutcome(means=means, rewards=rewards)
        self._t = t
        return self._round

    def pull(self, arm: int) -> float:
        if self._round is None:
            raise DataError("pull called outside a round")
        reward = check_reward(float(self._round.rewards[arm]))
        self._round = None
        self._close_round(self._t)
        return reward


class StaticEnvironment(Environment):
    """Fixed mean vector"""

    kind = "static"

    def __init__(self, means: np.ndarray, rng: RngStream, reward_kind: RewardKind = RewardKind.BERNOULLI,
                 reward_width: float = 0.0):
        means = np.asarray(means, dtype=float)
        super().__init__(means.size, rng, reward_kind, reward_width)
        _check_support(means, self.reward_kind, self.reward_width)
        self.means = means

    def mean_vector(self, t: int) -> np.ndarray:
        return self.means


class StochasticGapEnvironment(StaticEnvironment):
    kind = "stochastic_gap"

    def __init__(self, k: int, delta: float, rng: RngStream, best: int = 0, **kwargs):
        super().__init__(stochastic_gap_means(k, delta, best), rng, **kwargs)
        self.delta = delta
        self.best = best


class ClusteredGapEnvironment(StaticEnvironment):
    kind = "clustered_gap"

    def __init__(self, p: int, m: int, L: float, l: float, mu_star: float, rng: RngStream, **kwargs):
        super().__init__(clustered_gap_means(p, m, L, l, mu_star), rng, **kwargs)
        self.p = p
        self.m = m


class PhasedAdversarialEnvironment(Environment):
    kind = "phased_adversarial"

    def __init__(self, k: int, delta: float, rng: RngStream, best: int = 0, base_phase: int = 50, **kwargs):
        super().__init__(k, rng, **kwargs)
        # validates delta, best and base_phase once
        phased_adversarial_means(0, delta, best, base_phase, k)
        self.delta = delta
        self.best = best
        self.base_phase = base_phase

    def mean_vector(self, t: int) -> np.ndarray:
        return phased_adversarial_means(t, self.delta, self.best, self.base_phase, self.k)


class MetricEnvironment(Environment):
    """Arms on a grid in Q with means 1 - ||a*(t) - x_i||.

    sigma = 0 keeps the optimum fixed (stochastic metric setup); sigma > 0 moves it by
    a clipped Gaussian random walk after every round.
    """

    kind = "metric"

    def __init__(self, grid: ArmGrid, rng: RngStream, sigma: Optional[float] = None,
                 start: Optional[np.ndarray] = None, **kwargs):
        super().__init__(grid.k, rng, **kwargs)
        self.grid = grid
        self.positions = grid.positions
        if sigma is None:
            sigma = grid.spacing / 100.0
        if sigma < 0:
            raise InvalidArgumentError(f"sigma must be non-negative, got {sigma}")
        a_star = grid.center if start is None else np.asarray(start, dtype=float)
        _check_in_cube(a_star, grid.d, "start")
        self.state = TravelingState(a_star=a_star, sigma=float(sigma))
        self._walk_rng = rng.derive("walk")

    def mean_vector(self, t: int) -> np.ndarray:
        return traveling_means(self.positions, self.state.a_star)

    def _close_round(self, t: int):
        self.state = random_walk_advance(self.state, self._walk_rng)


class TraceEnvironment(Environment):
    """Replays interpolated trace rewards; step t reads trace time first + t"""

    kind = "trace"

    def __init__(self, trace: RewardTrace, rng: RngStream, reward_kind: RewardKind = RewardKind.EXACT,
                 reward_width: float = 0.0):
        super().__init__(trace.k, rng, reward_kind, reward_width)
        self.trace = trace

    def mean_vector(self, t: int) -> np.ndarray:
        return self.trace.means_at(self.trace.first + t)
