from pathlib import Path

from ..config import ExperimentConfig
from ..data import edge_homophily, save_tag_dataset
from ..errors import ConfigError
from ..experiment.workspace import load_graph
from ..logging_config import get_logger

logger = get_logger(__name__)


def cmd_make_synthetic(config: ExperimentConfig) -> Path:
    """Write the configured synthetic dataset to the output directory in the loadable file layout"""
    if not config.dataset.synthetic:
        config = config.model_copy(update={"dataset": config.dataset.model_copy(update={"synthetic": True})})
    if config.dataset.directory:
        raise ConfigError("make-synthetic writes to --out; unset dataset.directory")
    graph = load_graph(config)
    directory = save_tag_dataset(graph, config.out_dir)
    logger.info("Synthetic dataset written", extra={
        "dataset": graph.name,
        "directory": str(directory),
        "num_nodes": graph.num_nodes,
        "edge_homophily": edge_homophily(graph),
    })
    return directory
