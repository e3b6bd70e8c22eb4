"""
Partition constructors (grid blocks, k-means, shuffled, round-robin) and the
nearest-neighbour Lipschitz-constant estimator
"""

import warnings
from typing import List

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.cluster import KMeans
from sklearn.exceptions import ConvergenceWarning
from sklearn.preprocessing import MinMaxScaler

from src.bandits.core import RngStream
from src.bandits.environments import ArmGrid
from src.bandits.errors import DomainError, InvalidArgumentError, PartitionError
from src.bandits.hierarchy import Partition
from src.config.logging_config import get_service_logger

logger = get_service_logger("partitioning")

KMEANS_MAX_ITER = 100
KMEANS_TOLERANCE = 1e-9
DEFAULT_NEIGHBORS = 4


def valid_grid_cluster_counts(grid: ArmGrid) -> List[int]:
    """Cluster counts q^d where q divides the lattice side"""
    return [q ** grid.d for q in range(1, grid.side + 1) if grid.side % q == 0]


def grid_partition(grid: ArmGrid, p: int) -> Partition:
    """Equal-volume axis-aligned blocks, ordered lexicographically by block origin"""
    valid = valid_grid_cluster_counts(grid)
    if p not in valid:
        raise PartitionError(
            f"p={p} does not split a {grid.side}^{grid.d} grid into equal blocks; valid p: {valid}"
        )
    q = int(round(p ** (1.0 / grid.d)))
    block = grid.side // q
    coords = np.stack(np.unravel_index(np.arange(grid.k), (grid.side,) * grid.d), axis=1)
    labels = np.ravel_multi_index(tuple((coords // block).T), (q,) * grid.d)
    clusters = tuple(tuple(np.flatnonzero(labels == c).tolist()) for c in range(p))
    return Partition(clusters=clusters, k=grid.k)


def kmeans_partition(features: np.ndarray, p: int, rng: RngStream) -> Partition:
    """Lloyd's k-means with k-means++ seeding on the arm feature vectors.

    Stops after KMEANS_MAX_ITER iterations or once the centroids move less than
    KMEANS_TOLERANCE in total. Clusters left empty (duplicate feature rows) take
    the arm farthest from its centroid. Clusters are ordered by their lowest arm index.
    """
    features = np.asarray(features, dtype=float)
    if features.ndim == 1:
        features = features[:, None]
    k = features.shape[0]
    if not (1 <= p <= k):
        raise PartitionError(f"k-means needs 1 <= p <= k, got p={p}, k={k}")
    if p == 1:
        return Partition.single(k)
    model = KMeans(
        n_clusters=p,
        init="k-means++",
        n_init=1,
        max_iter=KMEANS_MAX_ITER,
        tol=_sklearn_tolerance(features),
        algorithm="lloyd",
        random_state=rng.seed_int(),
    )
    with warnings.catch_warnings():
        # duplicate rows; handled by _fill_empty_clusters
        warnings.simplefilter("ignore", ConvergenceWarning)
        labels = model.fit_predict(features)
    labels = _fill_empty_clusters(features, labels, model.cluster_centers_, p)
    return Partition.from_labels(labels)


def _sklearn_tolerance(features: np.ndarray) -> float:
    """sklearn stops on squared centroid shift <= tol * mean feature variance"""
    scale = float(np.var(features, axis=0).mean())
    if scale == 0.0:
        return 0.0
    return KMEANS_TOLERANCE ** 2 / scale


def _fill_empty_clusters(features: np.ndarray, labels: np.ndarray, centers: np.ndarray, p: int) -> np.ndarray:
    labels = np.asarray(labels).copy()
    for c in range(p):
        if np.any(labels == c):
            continue
        counts = np.bincount(labels, minlength=p)
        distance = np.linalg.norm(features - centers[labels], axis=1)
        distance[counts[labels] < 2] = -1.0
        moved = int(np.argmax(distance))
        logger.log_function_warning("kmeans_partition", "empty cluster re-seeded", cluster=c, arm=moved)
        labels[moved] = c
    return labels


def _check_divides(k: int, p: int):
    if p < 1 or k % p != 0:
        raise PartitionError(f"p={p} must divide k={k}")


def shuffled_partition(k: int, p: int, rng: RngStream) -> Partition:
    """Random permutation of the arms split into p blocks of k / p"""
    _check_divides(k, p)
    order = rng.permutation(k)
    size = k // p
    clusters = tuple(tuple(sorted(order[i * size:(i + 1) * size].tolist())) for i in range(p))
    return Partition(clusters=clusters, k=k)


def round_robin_partition(k: int, p: int) -> Partition:
    """Arm i goes to cluster i mod p"""
    _check_divides(k, p)
    return Partition(clusters=tuple(tuple(range(c, k, p)) for c in range(p)), k=k)


def normalize_features(features: np.ndarray) -> np.ndarray:
    """Per-dimension min-max scaling to [0, 1]"""
    features = np.asarray(features, dtype=float)
    if features.ndim == 1:
        features = features[:, None]
    return MinMaxScaler().fit_transform(features)


def lipschitz_estimate(features: np.ndarray, mean_rewards: np.ndarray, n: int = DEFAULT_NEIGHBORS) -> np.ndarray:
    """l_i = mean over the n nearest neighbours j of |r_j - r_i| / ||x_j - x_i||.

    Neighbours are ranked by Euclidean distance, ties by arm index.
    """
    features = np.asarray(features, dtype=float)
    if features.ndim == 1:
        features = features[:, None]
    rewards = np.asarray(mean_rewards, dtype=float)
    k = features.shape[0]
    if rewards.shape != (k,):
        raise InvalidArgumentError(f"need one reward per arm, got {rewards.shape} for {k} arms")
    if not (1 <= n < k):
        raise InvalidArgumentError(f"neighbour count must satisfy 1 <= n < k, got n={n}, k={k}")
    distances = cdist(features, features)
    np.fill_diagonal(distances, np.inf)
    if np.any(distances == 0):
        i, j = np.argwhere(distances == 0)[0]
        raise DomainError(f"arms {i} and {j} share a position; Lipschitz ratio undefined")
    neighbours = np.argsort(distances, axis=1, kind="stable")[:, :n]
    rows = np.arange(k)[:, None]
    ratios = np.abs(rewards[neighbours] - rewards[:, None]) / distances[rows, neighbours]
    return ratios.mean(axis=1)
