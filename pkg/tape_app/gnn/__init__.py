from .checkpoint import load_checkpoint, save_checkpoint
from .models import GnnModel, build_model, forward, normalize_adjacency, predict
from .schemas import CheckpointMeta, EpochRecord, GnnConfig
from .train import train_gnn

__all__ = [
    "CheckpointMeta",
    "EpochRecord",
    "GnnConfig",
    "GnnModel",
    "build_model",
    "forward",
    "load_checkpoint",
    "normalize_adjacency",
    "predict",
    "save_checkpoint",
    "train_gnn",
]
