"""Exception types shared across the package."""


class ConfigError(Exception):
    """Bad run configuration: unknown key, missing key, or malformed value."""


class HypothesisError(ValueError):
    """Operation invoked outside the parameter regime it is defined for."""


class WindowAuditError(RuntimeError):
    """A finite simulation window was too small for the requested statistic."""
