"""Run-directory plumbing shared by the experiment runner and the CLI commands"""
import time
from typing import Any, Dict, List, Optional, Tuple

from ..config import ExperimentConfig
from ..data import (TextAttributedGraph, builtin_label_space, load_label_space, load_tag_dataset,
                    load_tag_directory, make_synthetic_tag, split_nodes)
from ..data.label_spaces import builtin_label_space_names
from ..data.schemas import LabelSpace
from ..errors import ConfigError
from ..io_utils import read_json
from ..llm import (EnrichmentRecord, LlmClient, PromptTemplate, ResponseCache, cache_path, generic_templates,
                   get_template, load_template_file, mock_oracle, oracle_transport)
from ..llm.enrichment import (EnrichmentResult, read_enriched, run_enrichment, write_enriched, write_parse_report,
                              write_summary)
from ..logging_config import get_logger, log_pipeline_event
from ..numeric.rng import stage_seed

logger = get_logger(__name__)

ENRICHED_FILE = "enriched.jsonl"
PARSE_REPORT_FILE = "parse_report.jsonl"
ENRICH_SUMMARY_FILE = "enrich_summary.json"


def resolve_label_space(config: ExperimentConfig) -> Optional[LabelSpace]:
    name_or_path = config.dataset.label_space
    if not name_or_path:
        return None
    if name_or_path in builtin_label_space_names():
        return builtin_label_space(name_or_path)
    return load_label_space(name_or_path)


def load_graph(config: ExperimentConfig) -> TextAttributedGraph:
    d = config.dataset
    label_space = resolve_label_space(config)
    if d.synthetic:
        graph = make_synthetic_tag(d.num_nodes, d.num_classes, d.homophily, d.keywords_per_class, d.seed,
                                   label_space=label_space, with_splits=False, name=d.name)
    elif d.directory:
        graph = load_tag_directory(d.directory, label_space)
    elif d.edges and d.texts and d.labels:
        if label_space is None:
            raise ConfigError("dataset.label_space is required when loading from individual files")
        graph = load_tag_dataset(d.edges, d.texts, d.labels, label_space, d.splits, name=d.name)
    else:
        raise ConfigError("dataset needs synthetic = true, a directory, or edges/texts/labels paths")
    if graph.splits is None:
        graph = graph.with_splits(split_nodes(graph, d.split_ratios, seed=stage_seed(d.seed, "split")))
    return require_evaluation_splits(graph)


def require_evaluation_splits(graph: TextAttributedGraph) -> TextAttributedGraph:
    if graph.splits is None:
        raise ConfigError(f"dataset {graph.name!r} has no train/val/test split")
    empty = [part for part in ("val", "test") if getattr(graph.splits, part).size == 0]
    if empty:
        raise ConfigError(f"dataset {graph.name!r} has an empty {' and '.join(empty)} split")
    return graph


def template_pool(config: ExperimentConfig, graph: TextAttributedGraph) -> List[PromptTemplate]:
    extra = generic_templates(graph.label_space, config.prompt.k)
    if config.prompt.template_file:
        extra += load_template_file(config.prompt.template_file)
    return extra


def resolve_template(config: ExperimentConfig, graph: TextAttributedGraph,
                     template_id: Optional[str] = None) -> PromptTemplate:
    template = get_template(template_id or config.prompt.template_id, template_pool(config, graph))
    if config.prompt.k is not None and config.prompt.k != template.expected_k:
        template = template.model_copy(update={"expected_k": config.prompt.k})
    if template.expected_k > graph.num_classes:
        raise ConfigError(f"template {template.template_id!r} asks for {template.expected_k} labels but the "
                          f"dataset has only {graph.num_classes} classes")
    return template


def open_client(config: ExperimentConfig, graph: TextAttributedGraph, k: int) -> LlmClient:
    """Real endpoint client, or one wired to the seeded oracle in mock mode"""
    if not config.mock.enabled:
        return LlmClient(config.llm)
    answer = mock_oracle(graph, config.mock.top1_accuracy, k, stage_seed(config.mock.seed, "mock"))
    return LlmClient(config.llm, transport=oracle_transport(answer), model_name=config.mock.model_name())


def open_cache(config: ExperimentConfig, graph: TextAttributedGraph, template: PromptTemplate) -> ResponseCache:
    path = cache_path(config.out_dir / "cache", graph.name, template.template_id)
    return ResponseCache(path, repair=config.experiment.repair_cache)


def enrichment_settings(config: ExperimentConfig, template: PromptTemplate, model_name: str) -> Dict[str, Any]:
    """What enriched records depend on; a mismatch with the saved summary makes them stale"""
    return {"model_name": model_name, "template_id": template.template_id, "k": template.expected_k,
            "abstract_budget": config.prompt.abstract_budget}


def enrich(config: ExperimentConfig, graph: TextAttributedGraph,
           template: Optional[PromptTemplate] = None) -> EnrichmentResult:
    """Query (through the cache), parse and write enriched records plus the parse report"""
    template = template or resolve_template(config, graph)
    cache = open_cache(config, graph, template)
    with open_client(config, graph, template.expected_k) as client:
        result = run_enrichment(graph, template, client, cache, abstract_budget=config.prompt.abstract_budget)
        result.summary.update(enrichment_settings(config, template, client.model_name))
    write_enriched(result.records, graph, config.out_dir / ENRICHED_FILE)
    write_parse_report(result.records, graph, config.out_dir / PARSE_REPORT_FILE)
    write_summary(result, config.out_dir / ENRICH_SUMMARY_FILE)
    return result


def ensure_records(config: ExperimentConfig, graph: TextAttributedGraph) -> Tuple[List[EnrichmentRecord], float]:
    """Enriched records from the run directory, enriching first when absent; returns (records, seconds spent)"""
    path = config.out_dir / ENRICHED_FILE
    summary_path = config.out_dir / ENRICH_SUMMARY_FILE
    if path.exists() and summary_path.exists():
        summary = read_json(summary_path)
        template = resolve_template(config, graph)
        model_name = config.mock.model_name() if config.mock.enabled else config.llm.model_name
        expected = enrichment_settings(config, template, model_name)
        records = read_enriched(path, graph)
        if len(records) == graph.num_nodes and all(summary.get(k) == v for k, v in expected.items()):
            return records, 0.0
        log_pipeline_event(logger, "enrichment_stale", {"path": str(path), "records": len(records)})
    start = time.time()
    result = enrich(config, graph)
    return result.records, time.time() - start
