class TriggerKitError(Exception):
    """Base class for errors raised by this package."""


class DatasetFormatError(TriggerKitError, ValueError):
    def __init__(self, message, path=None, lineno=None):
        where = ""
        if path is not None:
            where = f"{path}:{lineno}: " if lineno is not None else f"{path}: "
        super().__init__(where + message)
        self.path = path
        self.lineno = lineno


class EmptyDatasetError(TriggerKitError, ValueError):
    pass


class UndefinedAccuracyError(TriggerKitError, ValueError):
    pass


class SearchBudgetError(TriggerKitError, ValueError):
    pass


class NonFiniteLossError(TriggerKitError, FloatingPointError):
    pass


class ArtifactMissingError(TriggerKitError, FileNotFoundError):
    pass


class ConfigError(TriggerKitError, ValueError):
    """Bad command-line or JSON configuration."""
