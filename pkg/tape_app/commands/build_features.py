from pathlib import Path
from typing import List

from ..config import ExperimentConfig
from ..experiment.runner import check_sources, prepare_features
from ..experiment.workspace import ensure_records, load_graph
from ..features.builder import feature_dir
from ..logging_config import get_logger

logger = get_logger(__name__)


def cmd_build_features(config: ExperimentConfig) -> List[Path]:
    """Feature files for every configured seed and source (reused when already built with this config)"""
    sources = check_sources(config.experiment.sources)
    graph = load_graph(config)
    records = []
    if any(s in sources for s in ("expl", "pred")):
        records, _ = ensure_records(config, graph)

    paths: List[Path] = []
    for seed in config.experiment.seeds:
        features = prepare_features(config, graph, records, seed, sources)
        paths.extend(feature_dir(config.out_dir, seed) / f"{source}.fm" for source in sorted(features.matrices))
    logger.info("Feature matrices ready", extra={"dataset": graph.name, "num_files": len(paths)})
    return paths
