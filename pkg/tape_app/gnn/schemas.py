from typing import Dict, Literal, Optional

from pydantic import BaseModel, Field


class GnnConfig(BaseModel):
    arch: Literal["gcn", "sage"] = "gcn"
    num_layers: int = Field(3, ge=1)
    hidden_dim: int = Field(256, ge=1)
    dropout: float = Field(0.5, ge=0, lt=1)
    learning_rate: float = Field(0.01, gt=0)
    max_epochs: int = Field(1000, ge=1)
    patience: int = Field(50, ge=0)
    seed: int = Field(0, ge=0)
    # width of a learnable linear map applied to the raw input before the first layer
    input_projection_dim: Optional[int] = Field(None, ge=1)


class EpochRecord(BaseModel):
    epoch: int
    train_loss: float
    val_accuracy: float


class CheckpointMeta(BaseModel):
    config: GnnConfig
    input_dim: int
    num_classes: int
    source: Optional[str] = None
    best_epoch: int = 0
    metrics: Dict[str, float] = Field(default_factory=dict)
