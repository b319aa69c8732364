"""Exception types for training and serving."""


class TrainerError(Exception):
    """Base class for every error raised by this package."""


class SchemaMismatch(TrainerError):
    pass


class ModelLoadFailure(TrainerError):
    pass


class NonFiniteLoss(TrainerError):
    def __init__(self, epoch: int, report: dict):
        super().__init__(f"loss became non-finite in epoch {epoch}")
        self.epoch = epoch
        self.report = report


class PortInUse(TrainerError):
    pass


class ArtifactMismatch(TrainerError):
    pass
