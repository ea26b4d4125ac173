from .graph import UNLABELED, SplitMask, TextAttributedGraph, edge_homophily
from .label_spaces import builtin_label_space
from .loader import load_label_space, load_tag_dataset, load_tag_directory, save_tag_dataset
from .schemas import LabelEntry, LabelSpace, NodeText
from .splits import split_nodes
from .synthetic import make_synthetic_tag

__all__ = [
    "UNLABELED",
    "LabelEntry",
    "LabelSpace",
    "NodeText",
    "SplitMask",
    "TextAttributedGraph",
    "builtin_label_space",
    "edge_homophily",
    "load_label_space",
    "load_tag_dataset",
    "load_tag_directory",
    "make_synthetic_tag",
    "save_tag_dataset",
    "split_nodes",
]
