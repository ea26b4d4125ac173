from ..config import ExperimentConfig
from ..experiment.workspace import enrich, load_graph
from ..llm.enrichment import EnrichmentResult
from ..logging_config import get_logger

logger = get_logger(__name__)


def cmd_enrich(config: ExperimentConfig) -> EnrichmentResult:
    """Prompt every node, query through the cache, parse, and write records plus the parse summary"""
    graph = load_graph(config)
    result = enrich(config, graph)
    logger.info("Enrichment written", extra={
        "dataset": graph.name,
        "num_records": len(result.records),
        "cache_hits": result.cache_hits,
        "network_calls": result.network_calls,
        "fallback_rate": result.summary["fallback_rate"],
    })
    return result
