"""Interpreter: a d -> d_h -> C MLP trained with cross-entropy on encoded texts.

The post-relu hidden layer becomes the frozen node feature for its source.
"""
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..errors import NumericError, ShapeError
from ..logging_config import get_logger, log_error, log_stage_end, log_stage_start
from ..numeric import Adam, Tape, Tensor
from .schemas import InterpreterConfig
from .tfidf import TfidfModel

logger = get_logger(__name__)


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int, dtype) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out)).astype(dtype)


@dataclass
class InterpreterModel:
    params: Dict[str, np.ndarray]
    hidden_dim: int
    num_classes: int
    encoder: Optional[TfidfModel] = None
    history: List[Dict[str, float]] = field(default_factory=list)
    best_epoch: int = 0

    @property
    def input_dim(self) -> int:
        return self.params["w1"].shape[0]


def init_params(input_dim: int, hidden_dim: int, num_classes: int, seed: int,
                dtype=np.float32) -> Dict[str, np.ndarray]:
    rng = np.random.default_rng(seed)
    return {
        "w1": glorot(rng, input_dim, hidden_dim, dtype),
        "b1": np.zeros(hidden_dim, dtype=dtype),
        "w2": glorot(rng, hidden_dim, num_classes, dtype),
        "b2": np.zeros(num_classes, dtype=dtype),
    }


def forward(tape: Tape, params: Dict[str, Tensor], x: Tensor) -> Tuple[Tensor, Tensor]:
    hidden = tape.relu(tape.add_bias(tape.matmul(x, params["w1"]), params["b1"]))
    logits = tape.add_bias(tape.matmul(hidden, params["w2"]), params["b2"])
    return hidden, logits


def _cross_entropy(params: Dict[str, np.ndarray], features: np.ndarray, labels: np.ndarray,
                   mask: np.ndarray) -> Tuple[Tape, Tensor]:
    tape = Tape()
    tensors = {name: tape.param(name, value) for name, value in params.items()}
    _, logits = forward(tape, tensors, tape.constant(features))
    loss = tape.nll_loss(tape.log_softmax(logits), labels, mask)
    return tape, loss


def _check_input(model_dim: int, features: np.ndarray) -> None:
    if features.ndim != 2 or features.shape[1] != model_dim:
        raise ShapeError(f"interpreter expects {model_dim} input columns, got shape {features.shape}")


def train_interpreter(features: np.ndarray, labels: np.ndarray, train_mask: np.ndarray, val_mask: np.ndarray,
                      hyper: InterpreterConfig, num_classes: Optional[int] = None,
                      encoder: Optional[TfidfModel] = None, source: str = "orig") -> InterpreterModel:
    """Adam on mean train cross-entropy; early stop on val cross-entropy, best weights restored"""
    train_idx = np.flatnonzero(train_mask) if np.asarray(train_mask).dtype == bool else np.asarray(train_mask)
    val_idx = np.flatnonzero(val_mask) if np.asarray(val_mask).dtype == bool else np.asarray(val_mask)
    if train_idx.size == 0:
        raise ValueError("train_interpreter needs a nonempty train mask")
    if not np.all(np.isfinite(features)):
        raise NumericError("interpreter input features contain non-finite values")
    num_classes = num_classes or int(labels[train_idx].max()) + 1

    params = init_params(features.shape[1], hyper.hidden_dim, num_classes, hyper.seed, features.dtype)
    optimizer = Adam(params, lr=hyper.learning_rate)
    best_loss, best_epoch, best_params = np.inf, 0, {k: v.copy() for k, v in params.items()}
    history: List[Dict[str, float]] = []
    start = time.time()
    log_stage_start(logger, "interpreter", {"source": source, "seed": hyper.seed, "num_train": int(train_idx.size)})

    for epoch in range(1, hyper.epochs + 1):
        try:
            tape, loss = _cross_entropy(params, features, labels, train_idx)
            optimizer.step(tape.backward(loss))
            val_loss = float(_cross_entropy(params, features, labels, val_idx)[1].value) if val_idx.size else None
        except NumericError as e:
            error = NumericError(f"interpreter training diverged at epoch {epoch} (lr={hyper.learning_rate}): {e}",
                                 {"epoch": epoch, "learning_rate": hyper.learning_rate, "source": source})
            log_error(logger, error, error.context, "train_interpreter")
            raise error from e

        history.append({"epoch": epoch, "train_loss": float(loss.value), "val_loss": val_loss})
        if val_loss is None:
            best_epoch, best_params = epoch, {k: v.copy() for k, v in params.items()}
            continue
        if val_loss < best_loss:
            best_loss, best_epoch = val_loss, epoch
            best_params = {k: v.copy() for k, v in params.items()}
        elif epoch - best_epoch > hyper.patience:
            break

    log_stage_end(logger, "interpreter", (time.time() - start) * 1000, {
        "source": source, "seed": hyper.seed, "epochs_run": len(history), "best_epoch": best_epoch,
    })
    return InterpreterModel(params=best_params, hidden_dim=hyper.hidden_dim, num_classes=num_classes,
                            encoder=encoder, history=history, best_epoch=best_epoch)


def extract_features(model: InterpreterModel, features: np.ndarray) -> np.ndarray:
    _check_input(model.input_dim, features)
    x = features.astype(model.params["w1"].dtype, copy=False)
    hidden = x @ model.params["w1"] + model.params["b1"]
    return np.maximum(hidden, 0).astype(np.float32)


def interpreter_logits(model: InterpreterModel, features: np.ndarray) -> np.ndarray:
    _check_input(model.input_dim, features)
    x = features.astype(model.params["w1"].dtype, copy=False)
    hidden = np.maximum(x @ model.params["w1"] + model.params["b1"], 0)
    return (hidden @ model.params["w2"] + model.params["b2"]).astype(np.float32)
