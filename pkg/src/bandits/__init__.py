"""
Hierarchical adversarial bandits: policies, the two-level agent, environments and partitions
"""

from .algorithms import PolicyKind, create_policy
from .core import BanditPolicy, RngStream
from .environments import ArmGrid, Environment, RewardKind, RewardTrace
from .errors import BanditError
from .hierarchy import AbobAgent, FlatAgent, Partition

__all__ = [
    "AbobAgent",
    "ArmGrid",
    "BanditError",
    "BanditPolicy",
    "Environment",
    "FlatAgent",
    "Partition",
    "PolicyKind",
    "RewardKind",
    "RewardTrace",
    "RngStream",
    "create_policy",
]
