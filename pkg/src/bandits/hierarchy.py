"""
Two-level bandit: a parent policy over clusters (virtual arms) and one child policy per cluster
"""

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from src.bandits.algorithms import PolicyKind, UCB1_ALPHA, create_policy
from src.bandits.core import BanditPolicy, RngStream
from src.bandits.errors import InvalidArgumentError, PartitionError
from src.config.logging_config import get_service_logger

logger = get_service_logger("hierarchy")

FLAT_CLUSTER = -1


@dataclass(frozen=True)
class Partition:
    """Ordered clusters of global arm indices.

    The position of an arm inside its cluster tuple is its local index in that
    cluster's child policy.
    """
    clusters: Tuple[Tuple[int, ...], ...]
    k: int
    membership: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        clusters = tuple(tuple(int(a) for a in c) for c in self.clusters)
        object.__setattr__(self, "clusters", clusters)
        if self.k < 1:
            raise PartitionError(f"partition needs k >= 1, got {self.k}")
        if not clusters:
            raise PartitionError("partition has no clusters")
        membership = np.full(self.k, -1, dtype=np.int64)
        for index, cluster in enumerate(clusters):
            if not cluster:
                raise PartitionError(f"cluster {index} is empty")
            for arm in cluster:
                if not (0 <= arm < self.k):
                    raise PartitionError(f"arm {arm} in cluster {index} is outside [0, {self.k})")
                if membership[arm] != -1:
                    raise PartitionError(f"arm {arm} appears in clusters {membership[arm]} and {index}")
                membership[arm] = index
        missing = np.flatnonzero(membership == -1)
        if missing.size:
            raise PartitionError(f"arms {missing.tolist()[:10]} are not assigned to any cluster")
        membership.setflags(write=False)
        object.__setattr__(self, "membership", membership)

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> "Partition":
        """Clusters from a per-arm label vector, ordered by their lowest arm"""
        labels = np.asarray(labels)
        order: List[int] = []
        for label in labels:
            if label not in order:
                order.append(label)
        clusters = tuple(tuple(np.flatnonzero(labels == label).tolist()) for label in order)
        return cls(clusters=clusters, k=len(labels))

    @classmethod
    def single(cls, k: int) -> "Partition":
        return cls(clusters=(tuple(range(k)),), k=k)

    @property
    def p(self) -> int:
        return len(self.clusters)

    def sizes(self) -> List[int]:
        return [len(c) for c in self.clusters]

    def cluster_of(self, arm: int) -> int:
        return int(self.membership[arm])

    def labels(self) -> np.ndarray:
        return np.array(self.membership)


def ell_of_partition(partition: Partition, mean_rewards: np.ndarray) -> float:
    """Smallest l such that the partition is an l-partition of the given means.

    ``mean_rewards`` is a (time x arm) matrix; l is the largest within-cluster spread
    of means over all rounds.
    """
    means = np.atleast_2d(np.asarray(mean_rewards, dtype=float))
    if means.shape[0] == 0:
        raise InvalidArgumentError("mean matrix has no rounds")
    if means.shape[1] < partition.k:
        raise InvalidArgumentError(
            f"mean matrix has {means.shape[1]} columns, partition covers {partition.k} arms"
        )
    ell = 0.0
    for cluster in partition.clusters:
        block = means[:, list(cluster)]
        ell = max(ell, float(np.max(block.max(axis=1) - block.min(axis=1))))
    return ell


class FlatAgent:
    """A single policy over all arms.

    It draws from the stream a one-cluster hierarchy gives its only child, so a flat
    run and a p = 1 hierarchical run with the same seed make identical choices.
    """

    def __init__(
        self,
        kind: PolicyKind,
        k: int,
        horizon: int,
        rng: RngStream,
        ucb_alpha: float = UCB1_ALPHA,
        tsallis_eta_scale: float = 1.0,
    ):
        if horizon < 1:
            raise InvalidArgumentError(f"horizon must be >= 1, got {horizon}")
        self.kind = PolicyKind(kind)
        self.horizon = horizon
        self.step_count = 0
        self.policy = create_policy(
            self.kind, k, horizon, rng.derive("child", 0),
            ucb_alpha=ucb_alpha, tsallis_eta_scale=tsallis_eta_scale,
        )

    @property
    def k(self) -> int:
        return self.policy.k

    def step(self, environment) -> Tuple[int, int, float]:
        if self.step_count >= self.horizon:
            raise InvalidArgumentError(f"horizon {self.horizon} already reached")
        arm = self.policy.select()
        reward = environment.pull(arm)
        self.policy.update(arm, reward)
        self.step_count += 1
        return FLAT_CLUSTER, arm, reward


class AbobAgent:
    """Hierarchical bandit over a fixed partition.

    Parent EXP3 uses gamma(p, T); child i uses gamma(|P^i|, T / p). Streams:
    ``derive("parent")`` for the parent, ``derive("child", i)`` for child i.
    """

    def __init__(
        self,
        partition: Partition,
        parent_kind: PolicyKind,
        child_kind: PolicyKind,
        horizon: int,
        rng: RngStream,
        ucb_alpha: float = UCB1_ALPHA,
        tsallis_eta_scale: float = 1.0,
    ):
        if not isinstance(partition, Partition):
            raise PartitionError(f"expected a Partition, got {type(partition).__name__}")
        if horizon < 1:
            raise InvalidArgumentError(f"horizon must be >= 1, got {horizon}")
        self.partition = partition
        self.parent_kind = PolicyKind(parent_kind)
        self.child_kind = PolicyKind(child_kind)
        self.horizon = horizon
        self.step_count = 0

        p = partition.p
        if self.parent_kind is PolicyKind.UCB1 and p > 1:
            logger.log_function_warning(
                "AbobAgent",
                "UCB1 parent sees nonstationary virtual arms while children explore",
                clusters=p,
            )
        self.parent: BanditPolicy = create_policy(
            self.parent_kind, p, horizon, rng.derive("parent"),
            ucb_alpha=ucb_alpha, tsallis_eta_scale=tsallis_eta_scale,
        )
        self.children: List[BanditPolicy] = [
            create_policy(
                self.child_kind, len(cluster), horizon / p, rng.derive("child", index),
                ucb_alpha=ucb_alpha, tsallis_eta_scale=tsallis_eta_scale,
            )
            for index, cluster in enumerate(partition.clusters)
        ]

    @property
    def k(self) -> int:
        return self.partition.k

    def step(self, environment) -> Tuple[int, int, float]:
        """One round: parent picks a cluster, its child picks an arm, both learn"""
        if self.step_count >= self.horizon:
            raise InvalidArgumentError(f"horizon {self.horizon} already reached")
        cluster = self.parent.select()
        child = self.children[cluster]
        local = child.select()
        arm = self.partition.clusters[cluster][local]
        reward = environment.pull(arm)
        child.update(local, reward)
        self.parent.update(cluster, reward)
        self.step_count += 1
        return cluster, arm, reward

    def work(self) -> int:
        return self.parent.work + sum(child.work for child in self.children)
