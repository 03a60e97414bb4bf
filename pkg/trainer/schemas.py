from typing import Literal, Optional, Tuple

from pydantic import BaseModel, Field, ValidationError, field_validator

from config.config import BATCH_SIZE, LEARNING_RATE, MAX_EPOCHS, MOMENTUM, TRAIN_FRACTION, WEIGHT_DECAY
from utils.errors import InvalidParameterError


# --- Schemas ---
class TrainConfig(BaseModel):
    learning_rate: float = Field(LEARNING_RATE, gt=0)
    momentum: float = Field(MOMENTUM, ge=0, lt=1)
    weight_decay: float = Field(WEIGHT_DECAY, ge=0)
    batch_size: int = Field(BATCH_SIZE, ge=1)
    max_epochs: int = Field(MAX_EPOCHS, ge=1)
    seed: int = Field(0, ge=0)
    lr_decay: Optional[Tuple[float, int]] = None
    deterministic: bool = True
    train_fraction: float = Field(TRAIN_FRACTION, gt=0, lt=1)
    dtype: Literal["float32", "float64"] = "float64"

    @field_validator("lr_decay")
    @classmethod
    def _check_decay(cls, value):
        if value is None:
            return value
        factor, every = value
        if not 0 < factor <= 1:
            raise ValueError(f"lr_decay factor must lie in (0, 1], got {factor}")
        if every < 1:
            raise ValueError(f"lr_decay interval must be >= 1 epoch, got {every}")
        return value

    def learning_rate_at(self, epoch: int) -> float:
        """Step schedule; epochs count from 1."""
        if self.lr_decay is None:
            return self.learning_rate
        factor, every = self.lr_decay
        return self.learning_rate * factor ** ((epoch - 1) // every)


def make_train_config(**values) -> TrainConfig:
    """Build a TrainConfig, reporting validation problems as InvalidParameterError."""
    try:
        return TrainConfig(**{k: v for k, v in values.items() if v is not None})
    except ValidationError as e:
        raise InvalidParameterError(f"Invalid training configuration: {e}") from e
