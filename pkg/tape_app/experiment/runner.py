"""The TAPE experiment: per-seed feature building, one GNN per source, and the mean ensemble.

Per-source GNN logits are kept per seed so ablations can recombine them
without retraining.
"""
import time
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from ..config import ALL_SOURCES, ExperimentConfig, ExperimentSettings, config_hash
from ..data.graph import TextAttributedGraph
from ..errors import ConfigError, DatasetFormatError
from ..features import FeatureSet, PredFeatureConfig, build_features, load_feature_set, save_feature_set
from ..features.remote import EmbeddingCache
from ..gnn import CheckpointMeta, GnnConfig, predict, save_checkpoint, train_gnn
from ..llm import EnrichmentRecord
from ..logging_config import get_logger, log_pipeline_event, log_stage_end, log_stage_start
from ..numeric.rng import stage_seed
from .ensemble import accuracy, ensemble_mean
from .schemas import AblationReport, ExperimentReport, MetricSummary, SplitMetrics
from .workspace import ensure_records, load_graph, require_evaluation_splits, resolve_template

logger = get_logger(__name__)

SHALLOW = "shallow"
EMBEDDING_CACHE_FILE = "embeddings.jsonl"


@dataclass
class SeedOutcome:
    seed: int
    logits: Dict[str, np.ndarray]
    interpreter_accuracy: Dict[str, Dict[str, float]] = field(default_factory=dict)


def check_sources(sources: Iterable[str]) -> List[str]:
    sources = list(dict.fromkeys(sources))
    unknown = [s for s in sources if s not in ALL_SOURCES]
    if unknown:
        raise ConfigError(f"unknown feature source(s) {unknown}; choose from {list(ALL_SOURCES)}")
    if not sources:
        raise ConfigError("an experiment needs at least one feature source")
    return sources


def feature_hash(config: ExperimentConfig) -> str:
    """Hash of everything the frozen features depend on (GNN and run settings excluded)"""
    return config_hash(config.model_copy(update={"gnn": GnnConfig(), "experiment": ExperimentSettings()}))


def pred_feature_config(config: ExperimentConfig, graph: TextAttributedGraph) -> PredFeatureConfig:
    k = config.pred.k or resolve_template(config, graph).expected_k
    d_p = k * (graph.num_classes + 1) if config.pred.mode == "identity" else config.pred.d_P
    return PredFeatureConfig(k=k, num_classes=graph.num_classes, d_P=d_p, mode=config.pred.mode)


def gnn_config(config: ExperimentConfig, seed: int, source: str) -> GnnConfig:
    update = {"seed": stage_seed(seed, f"gnn_{source}")}
    if source == "pred" and config.pred.mode == "learned":
        update["input_projection_dim"] = config.pred.d_P
    return config.gnn.model_copy(update=update)


def prepare_features(config: ExperimentConfig, graph: TextAttributedGraph, records: Sequence[EnrichmentRecord],
                     seed: int, sources: Sequence[str], build_missing: bool = True) -> FeatureSet:
    """Reuse feature files from the run directory when their hash matches, else build and save them"""
    wanted = list(sources) + ([SHALLOW] if config.experiment.shallow_baseline else [])
    digest = feature_hash(config)
    try:
        cached = load_feature_set(config.out_dir, seed, wanted)
        if all(m.meta.config_hash == digest for m in cached.matrices.values()):
            log_pipeline_event(logger, "features_reused", {"seed": seed, "sources": wanted})
            return cached
    except (ConfigError, DatasetFormatError):
        if not build_missing:
            raise
    if not build_missing:
        raise ConfigError(f"feature files for seed {seed} were built with a different configuration")
    embedding_cache = None
    if config.encoder.remote_endpoint:
        embedding_cache = EmbeddingCache(Path(config.out_dir) / "cache" / EMBEDDING_CACHE_FILE)
    features = build_features(graph, records, seed, digest, config.encoder, config.interpreter,
                              pred_feature_config(config, graph), sources=sources,
                              shallow=config.experiment.shallow_baseline, embedding_cache=embedding_cache,
                              llm=config.llm)
    save_feature_set(features, config.out_dir)
    return features


def _split_accuracy(logits: np.ndarray, graph: TextAttributedGraph) -> Dict[str, float]:
    return {part: accuracy(logits, graph.labels, getattr(graph.splits, part)) for part in ("val", "test")}


def train_sources(config: ExperimentConfig, graph: TextAttributedGraph, features: FeatureSet,
                  timings: Dict[str, float]) -> Dict[str, np.ndarray]:
    """One GNN per feature source, up to three at a time; returns eval-mode logits per source"""
    seed = features.seed

    def run(source: str):
        start = time.time()
        model, history = train_gnn(features[source].values, graph, gnn_config(config, seed, source), source=source)
        logits = predict(model, features[source].values)
        if config.experiment.save_checkpoints:
            best = max(history, key=lambda r: (r.val_accuracy, -r.epoch))
            meta = CheckpointMeta(config=model.config, input_dim=model.input_dim, num_classes=model.num_classes,
                                  source=source, best_epoch=best.epoch,
                                  metrics={f"{k}_accuracy": v for k, v in _split_accuracy(logits, graph).items()})
            save_checkpoint(model, Path(config.out_dir) / "checkpoints" / f"seed{seed}" / f"{source}.gnn", meta)
        return source, logits, time.time() - start

    with ThreadPoolExecutor(max_workers=3) as pool:
        results = list(pool.map(run, sorted(features.matrices)))
    logits = {}
    for source, values, seconds in results:
        logits[source] = values
        timings[f"train:{source}"] = timings.get(f"train:{source}", 0.0) + seconds
    return logits


def collect_outcomes(config: ExperimentConfig, graph: TextAttributedGraph, records: Sequence[EnrichmentRecord],
                     sources: Sequence[str], timings: Dict[str, float],
                     build_missing: bool = True) -> List[SeedOutcome]:
    """Seeds run sequentially so every RNG stream is reproducible"""
    outcomes = []
    for seed in config.experiment.seeds:
        start = time.time()
        features = prepare_features(config, graph, records, seed, sources, build_missing)
        timings["features"] = timings.get("features", 0.0) + time.time() - start
        logits = train_sources(config, graph, features, timings)
        interp = {
            source: {part: features[source].meta.extra[f"interpreter_{part}_acc"] for part in ("val", "test")}
            for source in ("orig", "expl")
            if source in features.matrices and "interpreter_val_acc" in features[source].meta.extra
        }
        outcomes.append(SeedOutcome(seed=seed, logits=logits, interpreter_accuracy=interp))
    return outcomes


def zero_shot_accuracy(records: Sequence[EnrichmentRecord], graph: TextAttributedGraph) -> Dict[str, float]:
    """Rank-1 LLM accuracy on val and test; a fallback parse counts as wrong"""
    top1 = np.full(graph.num_nodes, -1, dtype=np.int64)
    for record in records:
        if record.ranked:
            top1[record.node_id] = record.ranked[0]
    out = {}
    for part in ("val", "test"):
        idx = getattr(graph.splits, part)
        if idx.size == 0:
            raise ConfigError(f"{part} split is empty")
        out[part] = float(np.mean(top1[idx] == graph.labels[idx]))
    return out


def _summarize(per_seed: List[Dict[str, float]]) -> SplitMetrics:
    return SplitMetrics(val=MetricSummary.from_values([r["val"] for r in per_seed]),
                        test=MetricSummary.from_values([r["test"] for r in per_seed]))


def _relative(new: float, base: float) -> Optional[float]:
    return (new - base) / base if base > 0 else None


def report_from_outcomes(config: ExperimentConfig, graph: TextAttributedGraph, outcomes: Sequence[SeedOutcome],
                         sources: Sequence[str], records: Optional[Sequence[EnrichmentRecord]],
                         timings: Dict[str, float], left_out: Sequence[str] = ()) -> ExperimentReport:
    start = time.time()
    per_source = {s: _summarize([_split_accuracy(o.logits[s], graph) for o in outcomes]) for s in sources}
    ensemble = _summarize([
        _split_accuracy(ensemble_mean([o.logits[s] for s in sources], config.experiment.ensemble_mode), graph)
        for o in outcomes
    ])
    interpreter = {
        s: _summarize([o.interpreter_accuracy[s] for o in outcomes])
        for s in sources if all(s in o.interpreter_accuracy for o in outcomes)
    }
    shallow = None
    if all(SHALLOW in o.logits for o in outcomes) and outcomes:
        shallow = _summarize([_split_accuracy(o.logits[SHALLOW], graph) for o in outcomes])
    zero_shot = _summarize([zero_shot_accuracy(records, graph)]) if records else None

    improvements = {}
    if shallow is not None:
        improvements["G_up"] = _relative(ensemble.test.mean, shallow.test.mean)
    if "orig" in interpreter:
        improvements["L_up"] = _relative(ensemble.test.mean, interpreter["orig"].test.mean)
    timings = dict(timings)
    timings["evaluate"] = timings.get("evaluate", 0.0) + time.time() - start

    return ExperimentReport(
        dataset=graph.name,
        arch=config.gnn.arch,
        sources=list(sources),
        ensemble_mode=config.experiment.ensemble_mode,
        per_source=per_source,
        ensemble=ensemble,
        seeds=list(config.experiment.seeds),
        config_hash=config_hash(config),
        timings=timings,
        llm_zero_shot=zero_shot,
        interpreter=interpreter,
        shallow=shallow,
        improvements={k: v for k, v in improvements.items() if v is not None},
        left_out=list(left_out),
    )


def _load_inputs(config: ExperimentConfig, graph: Optional[TextAttributedGraph],
                 records: Optional[Sequence[EnrichmentRecord]], sources: Sequence[str], timings: Dict[str, float]):
    graph = require_evaluation_splits(graph) if graph is not None else load_graph(config)
    if records is None and any(s in sources for s in ("expl", "pred")):
        records, seconds = ensure_records(config, graph)
        timings["enrich"] = timings.get("enrich", 0.0) + seconds
    return graph, records


def run_tape_experiment(config: ExperimentConfig, graph: Optional[TextAttributedGraph] = None,
                        records: Optional[Sequence[EnrichmentRecord]] = None,
                        sources: Optional[Sequence[str]] = None, build_missing: bool = True) -> ExperimentReport:
    """Train one GNN per source for every seed; report each source alone and their ensemble"""
    sources = check_sources(sources if sources is not None else config.experiment.sources)
    timings: Dict[str, float] = defaultdict(float)
    start = time.time()
    log_stage_start(logger, "experiment", {"sources": sources, "seeds": config.experiment.seeds})
    graph, records = _load_inputs(config, graph, records, sources, timings)
    outcomes = collect_outcomes(config, graph, records or [], sources, timings, build_missing)
    report = report_from_outcomes(config, graph, outcomes, sources, records, timings)
    log_stage_end(logger, "experiment", (time.time() - start) * 1000, {
        "dataset": graph.name, "ensemble_test": report.ensemble.test.mean,
        "per_source_test": {s: m.test.mean for s, m in report.per_source.items()},
    })
    return report


def _deltas(report: ExperimentReport, full: ExperimentReport) -> Dict[str, float]:
    return {
        "ensemble_val": report.ensemble.val.mean - full.ensemble.val.mean,
        "ensemble_test": report.ensemble.test.mean - full.ensemble.test.mean,
    }


def ablation_sweep(config: ExperimentConfig, leave_out: Iterable[str],
                   graph: Optional[TextAttributedGraph] = None,
                   records: Optional[Sequence[EnrichmentRecord]] = None) -> ExperimentReport:
    """Experiment on the complement of ``leave_out`` with deltas against the full source set"""
    full_sources = check_sources(config.experiment.sources)
    leave_out = list(dict.fromkeys(leave_out))
    unknown = [s for s in leave_out if s not in full_sources]
    if unknown:
        raise ConfigError(f"cannot leave out {unknown}: not among the configured sources {full_sources}")
    kept = [s for s in full_sources if s not in leave_out]
    if not kept:
        raise ConfigError("leaving out every feature source leaves nothing to train")

    timings: Dict[str, float] = {}
    graph, records = _load_inputs(config, graph, records, full_sources, timings)
    outcomes = collect_outcomes(config, graph, records or [], full_sources, timings)
    full = report_from_outcomes(config, graph, outcomes, full_sources, records, timings)
    report = report_from_outcomes(config, graph, outcomes, kept, records, timings, left_out=leave_out)
    report.deltas = _deltas(report, full)
    return report


def leave_one_out_sweep(config: ExperimentConfig, graph: Optional[TextAttributedGraph] = None,
                        records: Optional[Sequence[EnrichmentRecord]] = None) -> AblationReport:
    """Full run plus one row per removed source, all from a single set of trained GNNs"""
    full_sources = check_sources(config.experiment.sources)
    if len(full_sources) < 2:
        raise ConfigError("a leave-one-out sweep needs at least two feature sources")
    timings: Dict[str, float] = {}
    graph, records = _load_inputs(config, graph, records, full_sources, timings)
    outcomes = collect_outcomes(config, graph, records or [], full_sources, timings)
    full = report_from_outcomes(config, graph, outcomes, full_sources, records, timings)
    rows = []
    for source in full_sources:
        kept = [s for s in full_sources if s != source]
        row = report_from_outcomes(config, graph, outcomes, kept, records, timings, left_out=[source])
        row.deltas = _deltas(row, full)
        rows.append(row)
    log_pipeline_event(logger, "ablation_complete", {
        "full_test": full.ensemble.test.mean,
        "rows": {f"-{r.left_out[0]}": r.ensemble.test.mean for r in rows},
    })
    return AblationReport(full=full, rows=rows)
