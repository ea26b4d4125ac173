import logging
import logging.handlers

import numpy as np
import pytest

from tape_app.config import load_config
from tape_app.data import LabelEntry, LabelSpace, NodeText, TextAttributedGraph, make_synthetic_tag, split_nodes
from tape_app.numeric.sparse import csr_from_edges

# small enough that a full mock experiment runs in a few seconds
FAST_SETTINGS = {
    "dataset.synthetic": True,
    "dataset.name": "tiny",
    "dataset.num_nodes": 120,
    "dataset.num_classes": 3,
    "dataset.keywords_per_class": 5,
    "mock.enabled": True,
    "encoder.max_features": 500,
    "encoder.min_df": 2,
    "encoder.dim": 32,
    "interpreter.hidden_dim": 16,
    "interpreter.learning_rate": 0.01,
    "interpreter.epochs": 30,
    "interpreter.patience": 5,
    "pred.d_P": 16,
    "gnn.num_layers": 2,
    "gnn.hidden_dim": 16,
    "gnn.max_epochs": 30,
    "gnn.patience": 10,
    "experiment.seeds": [0],
    "prompt.sweep_sample": 40,
}


@pytest.fixture(autouse=True)
def detach_log_handlers():
    """Close the handlers CLI runs install"""
    yield
    for logger in (logging.getLogger("tape"), logging.getLogger("httpx"), logging.getLogger()):
        for handler in list(logger.handlers):
            if type(handler) in (logging.StreamHandler, logging.handlers.RotatingFileHandler):
                logger.removeHandler(handler)
                handler.close()


@pytest.fixture
def fast_settings():
    return dict(FAST_SETTINGS)


@pytest.fixture
def abc_space():
    return LabelSpace.from_entries([LabelEntry(name="Alpha"), LabelEntry(name="Beta"), LabelEntry(name="Gamma")])


@pytest.fixture
def graph_factory(abc_space):
    """Path graph 0-1-...-(n-1) with the given labels (-1 = unlabeled) over the Alpha/Beta/Gamma space"""

    def build(labels, edges=None, splits=True, seed=0):
        n = len(labels)
        if edges is None:
            edges = [(i, i + 1) for i in range(n - 1)]
        src = [u for u, _ in edges]
        dst = [v for _, v in edges]
        graph = TextAttributedGraph(
            adjacency=csr_from_edges(n, src, dst),
            texts=tuple(NodeText(node_id=i, title=f"title {i}", abstract=f"abstract of node {i}") for i in range(n)),
            labels=np.asarray(labels, dtype=np.int64),
            label_space=abc_space,
        )
        if splits:
            graph = graph.with_splits(split_nodes(graph, seed=seed))
        return graph.validate()

    return build


@pytest.fixture(scope="session")
def small_tag():
    return make_synthetic_tag(120, 3, 0.8, 5, seed=3, name="tiny")


@pytest.fixture
def make_config(tmp_path):
    """Validated ExperimentConfig built from FAST_SETTINGS plus dotted overrides"""

    def build(extra=None, out="run"):
        settings = dict(FAST_SETTINGS)
        settings["experiment.out_dir"] = str(tmp_path / out)
        settings.update(extra or {})
        return load_config(None, list(settings.items()))

    return build
