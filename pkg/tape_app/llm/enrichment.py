import json
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

from pydantic import ValidationError

from ..data.graph import TextAttributedGraph
from ..errors import DatasetFormatError
from ..io_utils import atomic_write_json, atomic_write_jsonl
from ..logging_config import get_logger, log_stage_end, log_stage_start
from .cache import ResponseCache
from .client import LlmClient
from .parser import parse_answer
from .prompting import DEFAULT_ABSTRACT_BUDGET, build_prompt
from .schemas import EnrichedLine, EnrichmentRecord, ParseStatus, PromptTemplate

logger = get_logger(__name__)

PathLike = Union[str, Path]


@dataclass
class EnrichmentResult:
    records: List[EnrichmentRecord]
    cache_hits: int = 0
    network_calls: int = 0
    summary: Dict = field(default_factory=dict)


def summarize(records: Sequence[EnrichmentRecord]) -> Dict:
    counts = Counter(r.parse_status.value for r in records)
    total = len(records)
    return {
        "num_records": total,
        "counts": {status.value: counts.get(status.value, 0) for status in ParseStatus},
        "fallback_rate": counts.get(ParseStatus.FALLBACK.value, 0) / total if total else 0.0,
    }


def run_enrichment(graph: TextAttributedGraph, template: PromptTemplate, client: LlmClient,
                   cache: ResponseCache, k: Optional[int] = None,
                   abstract_budget: int = DEFAULT_ABSTRACT_BUDGET,
                   node_indices: Optional[Sequence[int]] = None) -> EnrichmentResult:
    """Prompt, query (through the cache) and parse every requested node.

    Requests fan out over ``client.config.max_in_flight`` worker threads;
    records come back in node order.
    """
    k = k or template.expected_k
    nodes = list(range(graph.num_nodes)) if node_indices is None else list(node_indices)
    calls_before = client.network_calls
    start = time.time()
    log_stage_start(logger, "enrich", {"dataset": graph.name, "template_id": template.template_id,
                                       "num_requests": len(nodes)})

    def work(node_id: int):
        prompt = build_prompt(graph.texts[node_id], template, abstract_budget)
        raw, hit = client.query_cached(node_id, prompt, cache)
        return parse_answer(raw, graph.label_space, k, node_id=node_id), hit

    with ThreadPoolExecutor(max_workers=client.config.max_in_flight) as pool:
        results = list(pool.map(work, nodes))

    records = [record for record, _ in results]
    hits = sum(1 for _, hit in results if hit)
    result = EnrichmentResult(
        records=records,
        cache_hits=hits,
        network_calls=client.network_calls - calls_before,
        summary=summarize(records),
    )
    log_stage_end(logger, "enrich", (time.time() - start) * 1000, {
        "dataset": graph.name,
        "template_id": template.template_id,
        "cache_hits": hits,
        "network_calls": result.network_calls,
        "fallback_rate": result.summary["fallback_rate"],
    })
    return result


def write_enriched(records: Sequence[EnrichmentRecord], graph: TextAttributedGraph, path: PathLike) -> Path:
    names = graph.label_space.class_names
    rows = [
        EnrichedLine(
            id=graph.node_ids[r.node_id],
            ranked=[names[c] for c in r.ranked],
            explanation=r.explanation,
            status=r.parse_status,
        ).model_dump(mode="json")
        for r in records
    ]
    return atomic_write_jsonl(path, rows)


def read_enriched(path: PathLike, graph: TextAttributedGraph) -> List[EnrichmentRecord]:
    index = {node_id: i for i, node_id in enumerate(graph.node_ids)}
    records = []
    with open(path, "r", encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                row = EnrichedLine.model_validate(json.loads(line))
            except (json.JSONDecodeError, ValidationError) as e:
                raise DatasetFormatError(f"{path}:{line_number}: malformed enriched record ({e.__class__.__name__})")
            if row.id not in index:
                raise DatasetFormatError(f"{path}:{line_number}: unknown node id {row.id!r}")
            ranked = []
            for name in row.ranked:
                c = graph.label_space.index_of(name)
                if c is None:
                    raise DatasetFormatError(f"{path}:{line_number}: label {name!r} not in label space")
                ranked.append(c)
            records.append(EnrichmentRecord(node_id=index[row.id], ranked=ranked, explanation=row.explanation,
                                            parse_status=row.status))
    return records


def write_parse_report(records: Sequence[EnrichmentRecord], graph: TextAttributedGraph, path: PathLike) -> Path:
    rows = [
        {"id": graph.node_ids[r.node_id], "status": r.parse_status.value, "num_labels": len(r.ranked)}
        for r in records
    ]
    return atomic_write_jsonl(path, rows)


def write_summary(result: EnrichmentResult, path: PathLike) -> Path:
    payload = dict(result.summary)
    payload.update({"cache_hits": result.cache_hits, "network_calls": result.network_calls})
    return atomic_write_json(path, payload)
