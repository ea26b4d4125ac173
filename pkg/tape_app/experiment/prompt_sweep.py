from typing import Optional, Sequence

import numpy as np

from ..config import ExperimentConfig
from ..data.graph import TextAttributedGraph
from ..errors import ConfigError
from ..llm import template_variants
from ..llm.enrichment import run_enrichment
from ..logging_config import get_logger, log_pipeline_event
from ..numeric.rng import stage_seed
from .schemas import PromptSweepReport, PromptSweepRow
from .workspace import load_graph, open_cache, open_client, resolve_template, template_pool

logger = get_logger(__name__)


def sample_nodes(graph: TextAttributedGraph, size: int, seed: int) -> np.ndarray:
    labeled = graph.labeled_indices
    if labeled.size == 0:
        raise ConfigError("prompt sweep needs labeled nodes")
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(labeled, size=min(size, labeled.size), replace=False))


def prompt_sweep(config: ExperimentConfig, graph: Optional[TextAttributedGraph] = None,
                 template_ids: Optional[Sequence[str]] = None) -> PromptSweepReport:
    """Zero-shot top-1 accuracy of each prompt template on one seeded node sample"""
    graph = graph or load_graph(config)
    template_ids = list(template_ids or config.prompt.sweep_templates)
    if template_ids:
        templates = [resolve_template(config, graph, t) for t in template_ids]
    else:
        family = resolve_template(config, graph).dataset
        templates = [resolve_template(config, graph, t.template_id)
                     for t in template_variants(family, template_pool(config, graph))]

    seed = stage_seed(config.experiment.seeds[0], "prompt_sweep")
    nodes = sample_nodes(graph, config.prompt.sweep_sample, seed)
    rows = []
    model_name = ""
    for template in templates:
        cache = open_cache(config, graph, template)
        with open_client(config, graph, template.expected_k) as client:
            model_name = client.model_name
            result = run_enrichment(graph, template, client, cache, abstract_budget=config.prompt.abstract_budget,
                                    node_indices=nodes.tolist())
        correct = sum(1 for r in result.records if r.ranked and r.ranked[0] == graph.labels[r.node_id])
        rows.append(PromptSweepRow(
            template_id=template.template_id,
            accuracy=correct / len(result.records),
            fallback_rate=result.summary["fallback_rate"],
            num_nodes=len(result.records),
            network_calls=result.network_calls,
        ))

    log_pipeline_event(logger, "prompt_sweep_complete", {
        "dataset": graph.name, "rows": {r.template_id: r.accuracy for r in rows},
    })
    return PromptSweepReport(dataset=graph.name, model_name=model_name, sample_seed=seed, rows=rows)
