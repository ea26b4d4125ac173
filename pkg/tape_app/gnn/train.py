import time
from typing import List, Tuple

import numpy as np

from ..data.graph import TextAttributedGraph
from ..errors import ConfigError, NumericError
from ..logging_config import get_logger, log_error, log_stage_end, log_stage_start
from ..numeric import Adam, Tape
from .models import GnnModel, build_model, forward, predict
from .schemas import EpochRecord, GnnConfig

logger = get_logger(__name__)


def _val_accuracy(logits: np.ndarray, labels: np.ndarray, val_idx: np.ndarray) -> float:
    if val_idx.size == 0:
        return 0.0
    return float(np.mean(np.argmax(logits[val_idx], axis=1) == labels[val_idx]))


def train_gnn(features: np.ndarray, graph: TextAttributedGraph, config: GnnConfig,
              source: str = "features") -> Tuple[GnnModel, List[EpochRecord]]:
    """Full-batch Adam on train cross-entropy; stop once val accuracy stalls for ``patience`` epochs.

    Returns the best-val-accuracy weights (earliest epoch wins ties) and the
    per-epoch history.
    """
    if graph.splits is None:
        raise ConfigError(f"dataset {graph.name!r} has no train/val/test split")
    if graph.splits.train.size == 0:
        raise ConfigError("train_gnn needs at least one training node")
    features = np.asarray(features)
    if not np.all(np.isfinite(features)):
        raise NumericError(f"{source} features contain non-finite values", {"source": source})

    model = build_model(graph.adjacency, features.shape[1], graph.num_classes, config, dtype=features.dtype)
    optimizer = Adam(model.params, lr=config.learning_rate)
    labels = graph.labels
    train_idx, val_idx = graph.splits.train, graph.splits.val

    best_acc, best_epoch = -1.0, 0
    best_params = {k: v.copy() for k, v in model.params.items()}
    history: List[EpochRecord] = []
    start = time.time()
    log_stage_start(logger, "train_gnn", {"source": source, "seed": config.seed, "arch": config.arch})

    for epoch in range(1, config.max_epochs + 1):
        try:
            tape = Tape()
            params = {name: tape.param(name, value) for name, value in model.params.items()}
            logits = forward(tape, model, params, features, train=True, epoch=epoch)
            loss = tape.nll_loss(tape.log_softmax(logits), labels, train_idx)
            optimizer.step(tape.backward(loss))
            val_acc = _val_accuracy(predict(model, features), labels, val_idx)
        except NumericError as e:
            error = NumericError(f"GNN training diverged at epoch {epoch} (lr={config.learning_rate}): {e}",
                                 {"epoch": epoch, "learning_rate": config.learning_rate, "source": source})
            log_error(logger, error, error.context, "train_gnn")
            raise error from e

        history.append(EpochRecord(epoch=epoch, train_loss=float(loss.value), val_accuracy=val_acc))
        if val_acc > best_acc:
            best_acc, best_epoch = val_acc, epoch
            best_params = {k: v.copy() for k, v in model.params.items()}
        elif epoch - best_epoch > config.patience:
            break

    model.params = best_params
    log_stage_end(logger, "train_gnn", (time.time() - start) * 1000, {
        "source": source, "seed": config.seed, "epochs_run": len(history),
        "best_epoch": best_epoch, "val_accuracy": best_acc,
    })
    return model, history
