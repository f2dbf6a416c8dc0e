"""Domain errors raised across the toolkit."""


class IngestionError(ValueError):
    """Tables cannot be turned into segments."""


class FoldError(ValueError):
    """Cross-validation folds cannot be built."""


class EmptyPoolError(ValueError):
    """A segment pool required for sampling is empty."""


class UnknownPresetError(ValueError):
    """A shift preset name is not registered."""


class BatchCompositionError(ValueError):
    """A batch violates the domain or label requirements of a loss term."""


class CheckpointMismatchError(ValueError):
    """A checkpoint does not belong to the dataset or config it is used with."""


class TrainingDivergedError(RuntimeError):
    """A loss became non-finite during training."""
