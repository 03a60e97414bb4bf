"""
Error families. Each family maps to one CLI exit code.
"""


class RebarScanError(Exception):
    exit_code = 1


class InvalidParameterError(RebarScanError, ValueError):
    exit_code = 2


class ShapeMismatchError(RebarScanError, ValueError):
    exit_code = 3


# ================= CHECKPOINTS =================
class CheckpointError(RebarScanError):
    exit_code = 4


class CheckpointVersionError(CheckpointError):
    pass


class CheckpointTruncatedError(CheckpointError):
    pass


class CheckpointShapeError(CheckpointError):
    pass


# ================= DATASETS =================
class DatasetError(RebarScanError):
    exit_code = 5


class MissingImageError(DatasetError):
    pass


class ClassStarvationError(DatasetError):
    pass


# ================= RUNS =================
class TrainingDivergedError(RebarScanError):
    exit_code = 6

    def __init__(self, epoch: int, loss: float):
        super().__init__(f"Training diverged at epoch {epoch}: loss={loss}")
        self.epoch = epoch
        self.loss = loss


class OutputDirError(RebarScanError):
    exit_code = 7


class GradcheckFailedError(RebarScanError):
    exit_code = 8


def error_family(exc: BaseException) -> str:
    """Short family name used in sweep status columns."""
    families = [
        (TrainingDivergedError, "diverged"),
        (DatasetError, "dataset"),
        (CheckpointError, "checkpoint"),
        (ShapeMismatchError, "shape"),
        (InvalidParameterError, "parameter"),
        (OutputDirError, "output"),
        (GradcheckFailedError, "gradcheck"),
    ]
    for cls, name in families:
        if isinstance(exc, cls):
            return name
    return "error"
