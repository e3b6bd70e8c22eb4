"""
Bandit core: arm/reward conventions, the policy contract and labelled random streams
"""

import hashlib
from abc import ABC, abstractmethod
from typing import Any, Tuple

import numpy as np

from src.bandits.errors import InvalidDistributionError, RewardRangeError

DISTRIBUTION_TOLERANCE = 1e-6


def _label_key(label: Tuple[Any, ...]) -> int:
    """Stable 64-bit key for a derivation label such as ("child", 3)"""
    text = "/".join(repr(part) for part in label)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


class RngStream:
    """Deterministic random stream with labelled derivation.

    Built on ``numpy.random.SeedSequence`` and ``PCG64``. A stream is identified by its
    seed and the path of labels it was derived through; ``derive`` never advances the
    parent, so sibling streams do not depend on the order they are created in.
    """

    def __init__(self, seed: int, path: Tuple[int, ...] = ()):
        if seed < 0:
            raise ValueError(f"seed must be non-negative, got {seed}")
        self.seed = int(seed)
        self.path = tuple(path)
        sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=self.path)
        self.generator = np.random.Generator(np.random.PCG64(sequence))
        self.draws = 0

    def derive(self, *label: Any) -> "RngStream":
        """Child stream for ``label``; identical labels give identical streams"""
        if not label:
            raise ValueError("derive needs a non-empty label")
        return RngStream(self.seed, self.path + (_label_key(label),))

    def uniform(self) -> float:
        """One draw from U[0, 1)"""
        self.draws += 1
        return float(self.generator.random())

    def uniforms(self, size: int) -> np.ndarray:
        self.draws += size
        return self.generator.random(size)

    def normal(self, scale: float, size: int) -> np.ndarray:
        self.draws += size
        return self.generator.normal(0.0, scale, size)

    def permutation(self, n: int) -> np.ndarray:
        self.draws += n
        return self.generator.permutation(n)

    def seed_int(self) -> int:
        """Integer seed for libraries that take a ``random_state``"""
        self.draws += 1
        return int(self.generator.integers(0, 2**31 - 1))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, path={self.path})"


def validate_distribution(probs: np.ndarray) -> np.ndarray:
    probs = np.asarray(probs, dtype=float)
    if probs.ndim != 1 or probs.size == 0:
        raise InvalidDistributionError("probability vector must be one-dimensional and non-empty")
    if np.any(probs < 0) or not np.all(np.isfinite(probs)):
        raise InvalidDistributionError(f"negative or non-finite probability in {probs.tolist()}")
    total = probs.sum()
    if abs(total - 1.0) > DISTRIBUTION_TOLERANCE:
        raise InvalidDistributionError(f"probabilities sum to {total!r}, expected 1")
    return probs


def sample_categorical(probs: np.ndarray, rng: RngStream) -> int:
    """Draw an index with probability ``probs[i]`` using exactly one uniform draw"""
    probs = validate_distribution(probs)
    cdf = np.cumsum(probs)
    u = rng.uniform() * cdf[-1]
    index = int(np.searchsorted(cdf, u, side="right"))
    if index >= probs.size:
        # rounding at the top end; fall back to the last arm with mass
        index = int(np.flatnonzero(probs > 0)[-1])
    return index


def check_reward(value: float) -> float:
    if not (0.0 <= value <= 1.0):
        raise RewardRangeError(f"reward {value!r} outside [0, 1]")
    return float(value)


def loss_from_reward(reward: float) -> float:
    """Loss consumed by loss-based policies: 1 - reward"""
    return 1.0 - check_reward(reward)


class BanditPolicy(ABC):
    """Contract shared by every flat policy.

    ``select`` returns an arm in [0, k); ``update`` is called with the arm that was
    just selected and the observed reward. ``work`` counts probability (or index)
    entries computed, which the hierarchy tests use to check the per-step cost.
    """

    name: str = "policy"

    def __init__(self, k: int, rng: RngStream):
        if k < 1:
            raise ValueError(f"a policy needs at least one arm, got k={k}")
        self.k = int(k)
        self.rng = rng
        self.work = 0

    @abstractmethod
    def probabilities(self) -> np.ndarray:
        """Current selection distribution over the k arms"""

    @abstractmethod
    def select(self) -> int:
        """Choose an arm"""

    @abstractmethod
    def update(self, arm: int, reward: float) -> None:
        """Feed back the reward of the arm returned by the last ``select``"""

    @abstractmethod
    def state_arrays(self) -> Tuple[np.ndarray, ...]:
        """Arrays that make up the learning state"""

    def fingerprint(self) -> str:
        """Digest of the learning state, for isolation checks"""
        h = hashlib.sha256()
        for array in self.state_arrays():
            h.update(np.ascontiguousarray(array).tobytes())
        return h.hexdigest()

    def __repr__(self) -> str:
        return f"{type(self).__name__}(k={self.k})"
