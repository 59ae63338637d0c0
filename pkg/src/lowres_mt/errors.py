"""Domain errors shared across the toolkit. The CLI maps these to exit code 1."""


class ToolkitError(Exception):
    """Base class for recoverable errors caused by bad data, config, or requests."""


class DataError(ToolkitError):
    """Malformed or inconsistent input data."""


class ConfigError(ToolkitError):
    """Invalid configuration, incompatible artifacts, or unresolved references."""


class TrainingError(ToolkitError):
    """Training diverged or was asked to do something impossible."""
