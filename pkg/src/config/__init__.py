from .settings import BenchSettings, get_settings

__all__ = ["BenchSettings", "get_settings"]
