from typing import Sequence

import numpy as np

from ..errors import ShapeError

ENSEMBLE_MODES = ("logits", "probs")


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    wide = np.asarray(logits, dtype=np.float64)
    shifted = np.exp(wide - wide.max(axis=1, keepdims=True))
    return shifted / shifted.sum(axis=1, keepdims=True)


def ensemble_mean(logits_list: Sequence[np.ndarray], mode: str = "logits") -> np.ndarray:
    """Elementwise mean of per-source outputs; ``probs`` averages row softmaxes instead"""
    if not logits_list:
        raise ValueError("ensemble_mean needs at least one matrix")
    if mode not in ENSEMBLE_MODES:
        raise ValueError(f"unknown ensemble mode {mode!r}; expected one of {ENSEMBLE_MODES}")
    shape = np.shape(logits_list[0])
    for matrix in logits_list[1:]:
        if np.shape(matrix) != shape:
            raise ShapeError(f"ensemble members disagree in shape: {shape} vs {np.shape(matrix)}")
    members = [softmax_rows(m) if mode == "probs" else np.asarray(m, dtype=np.float64) for m in logits_list]
    return np.mean(np.stack(members), axis=0)


def accuracy(logits: np.ndarray, labels: np.ndarray, mask) -> float:
    """Fraction of masked nodes whose argmax matches the label; ties go to the lowest class index"""
    mask = np.asarray(mask)
    idx = np.flatnonzero(mask) if mask.dtype == bool else mask.astype(np.int64).ravel()
    if idx.size == 0:
        raise ValueError("accuracy needs a nonempty mask")
    predicted = np.argmax(np.asarray(logits)[idx], axis=1)
    return float(np.mean(predicted == np.asarray(labels)[idx]))
