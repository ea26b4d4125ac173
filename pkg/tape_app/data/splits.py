import math
from typing import Sequence

import numpy as np

from ..errors import ConfigError
from .graph import SplitMask, TextAttributedGraph

DEFAULT_RATIOS = (0.6, 0.2, 0.2)


def validate_ratios(ratios: Sequence[float]) -> None:
    if len(ratios) != 3:
        raise ConfigError(f"split ratios need (train, val, test), got {tuple(ratios)}")
    if any(r <= 0 for r in ratios):
        raise ConfigError(f"split ratios must be positive, got {tuple(ratios)}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigError(f"split ratios must sum to 1, got {tuple(ratios)} (sum {sum(ratios)})")


def split_nodes(graph: TextAttributedGraph, ratios: Sequence[float] = DEFAULT_RATIOS, seed: int = 0) -> SplitMask:
    """Seeded random partition of the labeled nodes.

    val and test get floor(n * ratio) nodes; the remainder goes to train. A split
    that would leave val or test empty is a ConfigError.
    """
    validate_ratios(ratios)
    labeled = graph.labeled_indices
    n = labeled.size
    if n < 3:
        raise ConfigError(f"need at least 3 labeled nodes to split, got {n}")

    n_val = math.floor(n * ratios[1] + 1e-9)
    n_test = math.floor(n * ratios[2] + 1e-9)
    empty = [name for name, size in (("val", n_val), ("test", n_test)) if size == 0]
    if empty:
        raise ConfigError(f"{n} labeled nodes with ratios {tuple(ratios)} leave the {' and '.join(empty)} split empty")
    order = np.random.default_rng(seed).permutation(labeled)
    return SplitMask.from_indices(
        train=order[n_val + n_test:],
        val=order[:n_val],
        test=order[n_val:n_val + n_test],
    )
