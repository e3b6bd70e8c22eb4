"""
Exception hierarchy for the bandit library and the experiment services
"""


class BanditError(Exception):
    """Base class for every error raised by the benchmark"""


class InvalidDistributionError(BanditError, ValueError):
    """Probability vector with a negative entry or a bad total"""


class RewardRangeError(BanditError, ValueError):
    """Reward, mean or reward support outside [0, 1]"""


class InvalidArgumentError(BanditError, ValueError):
    """Argument outside its documented domain"""


class InvalidProbabilityError(BanditError, ValueError):
    """Selection probability that cannot be used as an importance weight"""


class NumericalFailureError(BanditError, ArithmeticError):
    """Iterative solver did not converge"""


class PartitionError(BanditError, ValueError):
    """Partition that is not disjoint, covering and non-empty, or cannot be built"""


class DomainError(BanditError, ValueError):
    """Point outside the metric action space"""


class TraceFormatError(BanditError, ValueError):
    """Malformed reward trace or feature file"""

    def __init__(self, message: str, path: str = None, line: int = None):
        self.path = path
        self.line = line
        location = ""
        if path is not None:
            location = f"{path}"
            if line is not None:
                location += f":{line}"
            location += ": "
        super().__init__(f"{location}{message}")


class OutOfRangeError(BanditError, IndexError):
    """Query outside the recorded range (no extrapolation)"""


class DataError(BanditError, ValueError):
    """Missing or inconsistent run data"""


class StatisticsError(BanditError, ValueError):
    """Samples that do not support the requested statistic"""


class ConfigError(BanditError, ValueError):
    """Invalid experiment configuration"""


class OutputPathError(BanditError, OSError):
    """Output location that cannot be written"""
