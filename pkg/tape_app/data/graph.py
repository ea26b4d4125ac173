from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp

from ..numeric.sparse import is_symmetric, validate_csr
from .schemas import LabelSpace, NodeText

UNLABELED = -1


def _frozen(values, dtype=np.int64) -> np.ndarray:
    arr = np.array(sorted(set(int(v) for v in values)), dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SplitMask:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray

    @classmethod
    def from_indices(cls, train, val, test) -> "SplitMask":
        return cls(train=_frozen(train), val=_frozen(val), test=_frozen(test))

    def validate(self, labels: np.ndarray) -> None:
        sets = [set(self.train.tolist()), set(self.val.tolist()), set(self.test.tolist())]
        if sets[0] & sets[1] or sets[0] & sets[2] or sets[1] & sets[2]:
            raise ValueError("train/val/test splits overlap")
        union = sets[0] | sets[1] | sets[2]
        if union and (min(union) < 0 or max(union) >= len(labels)):
            raise ValueError("split references a node outside the graph")
        unlabeled = [i for i in union if labels[i] == UNLABELED]
        if unlabeled:
            raise ValueError(f"split includes unlabeled nodes: {sorted(unlabeled)[:10]}")

    def as_bool(self, part: str, num_nodes: int) -> np.ndarray:
        mask = np.zeros(num_nodes, dtype=bool)
        mask[getattr(self, part)] = True
        return mask

    @property
    def sizes(self) -> Tuple[int, int, int]:
        return len(self.train), len(self.val), len(self.test)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SplitMask):
            return NotImplemented
        return all(np.array_equal(getattr(self, p), getattr(other, p)) for p in ("train", "val", "test"))


@dataclass(frozen=True, eq=False)
class TextAttributedGraph:
    adjacency: sp.csr_matrix
    texts: Tuple[NodeText, ...]
    labels: np.ndarray
    label_space: LabelSpace
    splits: Optional[SplitMask] = None
    node_ids: Tuple[str, ...] = field(default=())
    name: str = "tag"

    def __post_init__(self):
        self.labels.setflags(write=False)
        if not self.node_ids:
            object.__setattr__(self, "node_ids", tuple(str(i) for i in range(len(self.texts))))

    @property
    def num_nodes(self) -> int:
        return self.adjacency.shape[0]

    @property
    def num_edges(self) -> int:
        """Stored (directed) entries; an undirected edge counts twice"""
        return int(self.adjacency.nnz)

    @property
    def num_classes(self) -> int:
        return self.label_space.num_classes

    @property
    def labeled_indices(self) -> np.ndarray:
        return np.flatnonzero(self.labels != UNLABELED)

    def validate(self) -> "TextAttributedGraph":
        n = self.num_nodes
        if self.adjacency.shape != (n, n):
            raise ValueError(f"adjacency must be square, got {self.adjacency.shape}")
        validate_csr(self.adjacency)
        if not is_symmetric(self.adjacency):
            raise ValueError("adjacency is not symmetric")
        if len(self.texts) != n or len(self.labels) != n or len(self.node_ids) != n:
            raise ValueError("texts, labels and node ids must have one entry per node")
        if any(t.node_id != i for i, t in enumerate(self.texts)):
            raise ValueError("node texts must be stored in node-index order")
        if len(set(self.node_ids)) != n:
            raise ValueError("node ids must be unique")
        bad = self.labels[(self.labels != UNLABELED) & ((self.labels < 0) | (self.labels >= self.num_classes))]
        if bad.size:
            raise ValueError(f"label index out of range [0, {self.num_classes}): {bad[:5].tolist()}")
        if self.splits is not None:
            self.splits.validate(self.labels)
        return self

    def with_splits(self, splits: SplitMask) -> "TextAttributedGraph":
        splits.validate(self.labels)
        return replace(self, splits=splits)

    def same_as(self, other: "TextAttributedGraph") -> bool:
        a, b = self.adjacency, other.adjacency
        return (
            a.shape == b.shape
            and np.array_equal(a.indptr, b.indptr)
            and np.array_equal(a.indices, b.indices)
            and np.array_equal(a.data, b.data)
            and self.texts == other.texts
            and np.array_equal(self.labels, other.labels)
            and self.label_space == other.label_space
            and self.node_ids == other.node_ids
            and self.splits == other.splits
        )


def edge_homophily(graph: TextAttributedGraph) -> float:
    """Fraction of undirected, non-loop edges between labeled nodes whose endpoints share a class"""
    upper = sp.triu(graph.adjacency, k=1).tocoo()
    labels = graph.labels
    keep = (labels[upper.row] != UNLABELED) & (labels[upper.col] != UNLABELED)
    if not np.any(keep):
        return 0.0
    same = labels[upper.row[keep]] == labels[upper.col[keep]]
    return float(same.mean())
