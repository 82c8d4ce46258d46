"""Domain exceptions shared across modules."""


class ConfigError(ValueError):
    """Bad or unknown configuration content."""


class OrderingError(ValueError):
    """Sensor data arrived out of timestamp order."""


class InitializationError(RuntimeError):
    """Filter initialization preconditions not met."""


class ScenarioInfeasibleError(RuntimeError):
    """Requested scenario cannot be realized (e.g. no reachable foothold)."""
