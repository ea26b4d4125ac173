from typing import Dict, Iterable, Optional

import numpy as np

from ..llm.parser import pad_ranked
from ..llm.schemas import EnrichmentRecord
from .schemas import PredFeatureConfig
from .tfidf import gaussian_projection


def one_hot_concat(ranked_padded, config: PredFeatureConfig) -> np.ndarray:
    """Position j*(C+1) + ranked[j] set to 1 for each rank j"""
    ranked = list(ranked_padded)
    if len(ranked) != config.k:
        raise ValueError(f"expected exactly k={config.k} ranked indices, got {len(ranked)}")
    width = config.num_classes + 1
    out = np.zeros(config.one_hot_width, dtype=np.float32)
    for j, c in enumerate(ranked):
        if not 0 <= int(c) <= config.absent_index:
            raise ValueError(f"class index {c} outside [0, {config.absent_index}]")
        out[j * width + int(c)] = 1.0
    return out


def projection_matrix(config: PredFeatureConfig) -> np.ndarray:
    """d_P x k(C+1); identity for the identity and learned modes"""
    if config.mode != "fixed":
        return np.eye(config.one_hot_width, dtype=np.float64)
    return gaussian_projection(config.one_hot_width, config.d_P, config.seed).T


def one_hot_matrix(records: Iterable[EnrichmentRecord], config: PredFeatureConfig, num_nodes: int) -> np.ndarray:
    by_node: Dict[int, EnrichmentRecord] = {r.node_id: r for r in records}
    absent = [config.absent_index] * config.k
    rows = np.zeros((num_nodes, config.one_hot_width), dtype=np.float32)
    for i in range(num_nodes):
        record: Optional[EnrichmentRecord] = by_node.get(i)
        if record is None:
            ranked = absent
        else:
            ranked = pad_ranked(record.model_copy(update={"ranked": record.ranked[:config.k]}), config.k,
                                config.absent_index)
        rows[i] = one_hot_concat(ranked, config)
    return rows


def encode_predictions(records: Iterable[EnrichmentRecord], config: PredFeatureConfig, num_nodes: int) -> np.ndarray:
    """N x output_dim prediction features; nodes without a record get all-absent ranks"""
    one_hots = one_hot_matrix(records, config, num_nodes)
    if config.mode != "fixed":
        return one_hots
    projection = projection_matrix(config)
    return (one_hots.astype(np.float64) @ projection.T).astype(np.float32)
