class VbnetError(Exception):
    """Base class of every error raised by vbnet."""


class ConfigurationError(VbnetError, ValueError):
    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"invalid config key '{key}': {message}")


class UsageError(VbnetError):
    """Command-line misuse: an unknown flag or a malformed argument."""


class DomainError(VbnetError, ValueError):
    pass


class ShapeError(VbnetError, ValueError):
    pass


class UnitLookupError(VbnetError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class IngestionError(VbnetError, ValueError):
    def __init__(self, message: str, row: int = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class SimulationError(VbnetError, RuntimeError):
    def __init__(self, message: str, step: int = None):
        self.step = step
        if step is not None:
            message = f"step {step}: {message}"
        super().__init__(message)


class TrainingError(VbnetError, RuntimeError):
    pass


class InferenceError(VbnetError, RuntimeError):
    def __init__(self, message: str, step: int = None):
        self.step = step
        if step is not None:
            message = f"rollout step {step}: {message}"
        super().__init__(message)
