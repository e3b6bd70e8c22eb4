"""
Centralized logging configuration for the benchmark
"""

import sys
from pathlib import Path
from typing import Any, Dict

from loguru import logger

from src.config.settings import get_settings

LOG_FORMAT = "{time:YYYY-MM-DD HH:mm:ss.SSS} | {level} | {extra[service]} | {function}:{line} | {message} | {extra}"

# Service-specific sinks; file names are relative to settings.log_dir
LOGGING_CONFIG: Dict[str, Dict[str, Any]] = {
    "experiment": {"file": "experiment_service.log", "level": "INFO"},
    "hierarchy": {"file": "hierarchy.log", "level": "INFO"},
    "partitioning": {"file": "partitioning_service.log", "level": "INFO"},
    "statistics": {"file": "statistics_service.log", "level": "INFO"},
    "output": {"file": "output_service.log", "level": "INFO"},
    "trace": {"file": "trace_service.log", "level": "INFO"},
    "lipschitz": {"file": "lipschitz_service.log", "level": "INFO"},
    "cli": {"file": "cli.log", "level": "INFO"},
}

SINK_DEFAULTS = {
    "rotation": "10 MB",
    "retention": "30 days",
    "compression": "zip",
}

_file_sinks: Dict[str, int] = {}


class ServiceLogger:
    """Service-specific logger with function start/success/error helpers"""

    def __init__(self, service_name: str):
        self.service_name = service_name
        self.config = LOGGING_CONFIG.get(service_name, LOGGING_CONFIG["experiment"])
        self._logger = logger.bind(service=service_name)

    def attach_file_sink(self, log_dir: Path):
        """Route this service's records to its own rotating file"""
        if self.service_name in _file_sinks:
            return
        log_dir.mkdir(parents=True, exist_ok=True)
        _file_sinks[self.service_name] = logger.add(
            str(log_dir / self.config["file"]),
            level=self.config["level"],
            format=LOG_FORMAT,
            filter=lambda record, name=self.service_name: record["extra"].get("service") == name,
            enqueue=True,
            backtrace=True,
            diagnose=False,
            **SINK_DEFAULTS,
        )

    def log_function_start(self, function_name: str, **kwargs):
        self._logger.info(f"Starting function: {function_name}",
                          function=function_name,
                          status="START",
                          parameters=kwargs)

    def log_function_success(self, function_name: str, result=None, execution_time=None, **kwargs):
        extra_data = {"function": function_name, "status": "SUCCESS"}
        if result is not None:
            extra_data["result_type"] = type(result).__name__
            if hasattr(result, "__len__"):
                extra_data["result_count"] = len(result)
        if execution_time is not None:
            extra_data["execution_time_ms"] = execution_time
        extra_data.update(kwargs)
        self._logger.success(f"Function completed successfully: {function_name}", **extra_data)

    def log_function_error(self, function_name: str, error: Exception, **kwargs):
        self._logger.error(f"Function failed: {function_name} - {error}",
                           function=function_name,
                           status="ERROR",
                           error_type=type(error).__name__,
                           error_message=str(error),
                           **kwargs)

    def log_function_warning(self, function_name: str, message: str, **kwargs):
        self._logger.warning(f"Function warning: {function_name} - {message}",
                             function=function_name,
                             status="WARNING",
                             **kwargs)

    def info(self, message: str, **kwargs):
        self._logger.info(message, **kwargs)

    def success(self, message: str, **kwargs):
        self._logger.success(message, **kwargs)


service_loggers: Dict[str, ServiceLogger] = {}


def get_service_logger(service_name: str) -> ServiceLogger:
    """Get or create service-specific logger"""
    if service_name not in service_loggers:
        service_loggers[service_name] = ServiceLogger(service_name)
    return service_loggers[service_name]


def setup_logging(level: str = None):
    """Install the console sink and, when enabled, the per-service file sinks"""
    settings = get_settings()
    logger.remove()
    _file_sinks.clear()
    logger.configure(extra={"service": "-"})
    logger.add(
        sys.stderr,
        level=(level or settings.log_level).upper(),
        format="{time:YYYY-MM-DD HH:mm:ss.SSS} | {level} | {extra[service]} | {message}",
        colorize=True,
    )
    if settings.log_to_file:
        for service_name in LOGGING_CONFIG:
            get_service_logger(service_name).attach_file_sink(Path(settings.log_dir))
    logger.info("Service logging system initialized")
