"""Exception types shared across the package.

ConfigError marks problems with user-supplied settings or input files; the
CLI maps it to exit code 1. Everything else surfaces as a runtime failure
(exit code 2).
"""


class ConfigError(ValueError):
    """Bad configuration value, flag, or input file."""
