"""Central finite-difference checks against Tape gradients"""
from typing import Callable, Dict

import numpy as np

from .tape import Tape, Tensor

LossBuilder = Callable[[Tape, Dict[str, Tensor]], Tensor]


def analytic_gradients(build_loss: LossBuilder, params: Dict[str, np.ndarray]) -> Dict[str, np.ndarray]:
    tape = Tape()
    tensors = {name: tape.param(name, value) for name, value in params.items()}
    return tape.backward(build_loss(tape, tensors))


def loss_value(build_loss: LossBuilder, params: Dict[str, np.ndarray]) -> float:
    tape = Tape()
    tensors = {name: tape.param(name, value) for name, value in params.items()}
    return float(build_loss(tape, tensors).value)


def numeric_gradients(build_loss: LossBuilder, params: Dict[str, np.ndarray],
                      step: float = 1e-4) -> Dict[str, np.ndarray]:
    grads = {}
    for name, value in params.items():
        grad = np.zeros_like(value, dtype=np.float64)
        for index in np.ndindex(value.shape):
            original = value[index]
            value[index] = original + step
            plus = loss_value(build_loss, params)
            value[index] = original - step
            minus = loss_value(build_loss, params)
            value[index] = original
            grad[index] = (plus - minus) / (2.0 * step)
        grads[name] = grad
    return grads


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    diff = np.linalg.norm(analytic - numeric)
    scale = max(np.linalg.norm(analytic) + np.linalg.norm(numeric), 1e-12)
    return float(diff / scale)


def check_gradients(build_loss: LossBuilder, params: Dict[str, np.ndarray],
                    step: float = 1e-4) -> Dict[str, float]:
    """Relative error per parameter; run in float64 for meaningful results"""
    analytic = analytic_gradients(build_loss, params)
    numeric = numeric_gradients(build_loss, params, step)
    return {name: relative_error(analytic[name], numeric[name]) for name in params}
