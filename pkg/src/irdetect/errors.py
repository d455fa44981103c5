"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """An architecture, dataset, or run configuration is invalid."""


class DataLoadError(RuntimeError):
    """A dataset directory is malformed. The message names the offending file."""


class TrainingDivergedError(RuntimeError):
    """A non-finite loss or validation metric appeared during training."""

    def __init__(self, step: int, message: str):
        super().__init__(f"step {step}: {message}")
        self.step = step
