"""
Services package initialization
"""

from .experiment_service import experiment_service
from .lipschitz_service import lipschitz_service
from .output_service import output_service
from .partition_service import partition_service
from .statistics_service import statistics_service
from .trace_service import trace_service

__all__ = [
    "experiment_service",
    "lipschitz_service",
    "output_service",
    "partition_service",
    "statistics_service",
    "trace_service",
]
