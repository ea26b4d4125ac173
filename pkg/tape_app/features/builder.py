import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from ..data.graph import TextAttributedGraph
from ..errors import ConfigError
from ..experiment.ensemble import accuracy
from ..llm.schemas import EnrichmentRecord, LlmConfig
from ..logging_config import get_logger, log_stage_end, log_stage_start
from ..numeric.rng import stage_seed
from .interpreter import extract_features, interpreter_logits, train_interpreter
from .pred_features import encode_predictions
from .remote import EmbeddingCache, embed_remote
from .schemas import FeatureMeta, InterpreterConfig, PredFeatureConfig, TfidfConfig
from .storage import FeatureMatrix, load_feature_matrix, save_feature_matrix
from .tfidf import encode_batch, fit_from_config

logger = get_logger(__name__)

PathLike = Union[str, Path]

TEXT_SOURCES = ("orig", "expl")


@dataclass
class FeatureSet:
    seed: int
    matrices: Dict[str, FeatureMatrix]
    interpreter_logits: Dict[str, np.ndarray] = field(default_factory=dict)

    def __getitem__(self, source: str) -> FeatureMatrix:
        return self.matrices[source]


def original_texts(graph: TextAttributedGraph) -> List[str]:
    return [f"{t.title}\n{t.abstract}" for t in graph.texts]


def explanation_texts(records: Sequence[EnrichmentRecord], num_nodes: int) -> List[str]:
    texts = [""] * num_nodes
    for record in records:
        texts[record.node_id] = record.explanation
    return texts


def _encode_corpus(corpus: List[str], encoder: TfidfConfig, projection_seed: int,
                   embedding_cache: Optional[EmbeddingCache], llm: Optional[LlmConfig]):
    if encoder.remote_endpoint:
        return None, embed_remote(corpus, encoder.remote_endpoint, model=encoder.remote_model, cache=embedding_cache,
                                  config=llm)
    model = fit_from_config(corpus, encoder, projection_seed)
    return model, encode_batch(model, corpus)


def _text_source(source: str, corpus: List[str], graph: TextAttributedGraph, seed: int, config_hash: str,
                 encoder: TfidfConfig, interpreter: InterpreterConfig,
                 embedding_cache: Optional[EmbeddingCache], llm: Optional[LlmConfig]):
    model, encoded = _encode_corpus(corpus, encoder, stage_seed(seed, f"projection_{source}"), embedding_cache, llm)
    hyper = interpreter.model_copy(update={"seed": stage_seed(seed, f"interpreter_{source}")})
    trained = train_interpreter(encoded, graph.labels, graph.splits.train, graph.splits.val, hyper,
                                num_classes=graph.num_classes, encoder=model, source=source)
    hidden = extract_features(trained, encoded)
    logits = interpreter_logits(trained, encoded)
    extra = {"best_epoch": trained.best_epoch, "epochs_run": len(trained.history)}
    for part in ("val", "test"):
        mask = getattr(graph.splits, part)
        if mask.size:
            extra[f"interpreter_{part}_acc"] = accuracy(logits, graph.labels, mask)
    meta = FeatureMeta(source=source, seed=seed, config_hash=config_hash, rows=hidden.shape[0],
                       cols=hidden.shape[1], extra=extra)
    return FeatureMatrix(values=hidden, meta=meta), logits


def shallow_features(graph: TextAttributedGraph, encoder: TfidfConfig, seed: int, config_hash: str) -> FeatureMatrix:
    """Projected TF-IDF of the original text, no interpreter training"""
    model = fit_from_config(original_texts(graph), encoder, stage_seed(seed, "projection_shallow"))
    values = encode_batch(model, original_texts(graph))
    return FeatureMatrix(values=values, meta=FeatureMeta(source="shallow", seed=seed, config_hash=config_hash,
                                                         rows=values.shape[0], cols=values.shape[1]))


def build_features(graph: TextAttributedGraph, records: Sequence[EnrichmentRecord], seed: int, config_hash: str,
                   encoder: TfidfConfig, interpreter: InterpreterConfig, pred: PredFeatureConfig,
                   sources: Sequence[str] = ("orig", "expl", "pred"), shallow: bool = False,
                   embedding_cache: Optional[EmbeddingCache] = None, llm: Optional[LlmConfig] = None) -> FeatureSet:
    """Build the requested feature sources for one seed; orig and expl interpreters train concurrently.

    With ``encoder.remote_endpoint`` set, texts are embedded through ``embedding_cache`` using the key and
    retry settings of ``llm``.
    """
    if graph.splits is None:
        raise ConfigError(f"dataset {graph.name!r} has no train/val/test split")
    unknown = set(sources) - {"orig", "expl", "pred"}
    if unknown:
        raise ConfigError(f"unknown feature sources: {sorted(unknown)}")
    if "expl" in sources and not records:
        raise ConfigError("feature source 'expl' needs enrichment records; run enrich first")

    start = time.time()
    log_stage_start(logger, "features", {"dataset": graph.name, "seed": seed, "sources": list(sources)})
    corpora = {"orig": original_texts(graph), "expl": explanation_texts(records, graph.num_nodes)}
    matrices: Dict[str, FeatureMatrix] = {}
    logits: Dict[str, np.ndarray] = {}

    text_sources = [s for s in TEXT_SOURCES if s in sources]
    with ThreadPoolExecutor(max_workers=max(1, len(text_sources))) as pool:
        futures = {
            s: pool.submit(_text_source, s, corpora[s], graph, seed, config_hash, encoder, interpreter,
                           embedding_cache, llm)
            for s in text_sources
        }
        for s, future in futures.items():
            matrices[s], logits[s] = future.result()

    if "pred" in sources:
        pred_config = pred.model_copy(update={"seed": stage_seed(seed, "pred")})
        values = encode_predictions(records, pred_config, graph.num_nodes)
        matrices["pred"] = FeatureMatrix(values=values, meta=FeatureMeta(
            source="pred", seed=seed, config_hash=config_hash, rows=values.shape[0], cols=values.shape[1],
            extra={"mode": pred_config.mode, "k": pred_config.k}))
    if shallow:
        matrices["shallow"] = shallow_features(graph, encoder, seed, config_hash)

    log_stage_end(logger, "features", (time.time() - start) * 1000, {
        "dataset": graph.name, "seed": seed,
        "shapes": {s: list(m.values.shape) for s, m in matrices.items()},
    })
    return FeatureSet(seed=seed, matrices=matrices, interpreter_logits=logits)


def feature_dir(out_dir: PathLike, seed: int) -> Path:
    return Path(out_dir) / "features" / f"seed{seed}"


def save_feature_set(features: FeatureSet, out_dir: PathLike) -> List[Path]:
    directory = feature_dir(out_dir, features.seed)
    return [save_feature_matrix(m, directory / f"{source}.fm") for source, m in sorted(features.matrices.items())]


def load_feature_set(out_dir: PathLike, seed: int, sources: Sequence[str]) -> FeatureSet:
    directory = feature_dir(out_dir, seed)
    matrices = {}
    for source in sources:
        path = directory / f"{source}.fm"
        if not path.exists():
            raise ConfigError(f"feature source {source!r} missing for seed {seed}: {path}")
        matrices[source] = load_feature_matrix(path)
    return FeatureSet(seed=seed, matrices=matrices)
