"""TF-IDF text encoder with an optional seeded Gaussian projection.

Weights follow the smoothed form idf(t) = ln((1 + N) / (1 + df(t))) + 1 and
document vectors are L2-normalized before projection.
"""
import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from ..errors import ConfigError
from ..logging_config import get_logger
from .schemas import TfidfConfig

logger = get_logger(__name__)

_NON_ALNUM = re.compile(r"[^0-9a-z]+")


def tokenize(text: str, min_token_len: int = 2) -> List[str]:
    return [t for t in _NON_ALNUM.split(text.lower()) if len(t) >= min_token_len]


@dataclass(frozen=True)
class TfidfModel:
    vocabulary: Dict[str, int]
    idf: np.ndarray
    max_features: int
    min_df: int
    min_token_len: int = 2
    projection: Optional[np.ndarray] = None
    num_documents: int = 0

    @property
    def vocab_size(self) -> int:
        return len(self.vocabulary)

    @property
    def dim(self) -> int:
        return self.vocab_size if self.projection is None else self.projection.shape[1]


def gaussian_projection(rows: int, dim: int, seed: int) -> np.ndarray:
    """Entries N(0, 1/dim)"""
    rng = np.random.default_rng(seed)
    return (rng.standard_normal((rows, dim)) / math.sqrt(dim)).astype(np.float64)


def fit_tfidf(corpus: Sequence[str], max_features: int = 20000, min_df: int = 5, min_token_len: int = 2,
              dim: Optional[int] = None, seed: int = 0) -> TfidfModel:
    if not corpus:
        raise ConfigError("cannot fit TF-IDF on an empty corpus")
    df: Counter = Counter()
    for text in corpus:
        df.update(set(tokenize(text, min_token_len)))

    kept = [term for term, count in df.items() if count >= min_df]
    if len(kept) > max_features:
        kept = sorted(kept, key=lambda term: (-df[term], term))[:max_features]
    if not kept:
        raise ConfigError(f"TF-IDF vocabulary is empty after filtering (min_df={min_df}, "
                          f"min_token_len={min_token_len}, documents={len(corpus)})")

    terms = sorted(kept)
    vocabulary = {term: i for i, term in enumerate(terms)}
    n_docs = len(corpus)
    idf = np.array([math.log((1 + n_docs) / (1 + df[t])) + 1.0 for t in terms], dtype=np.float64)
    projection = gaussian_projection(len(terms), dim, seed) if dim else None

    logger.info("Fitted TF-IDF vocabulary", extra={
        "num_documents": n_docs, "vocab_size": len(terms), "projection_dim": dim,
    })
    return TfidfModel(vocabulary=vocabulary, idf=idf, max_features=max_features, min_df=min_df,
                      min_token_len=min_token_len, projection=projection, num_documents=n_docs)


def fit_from_config(corpus: Sequence[str], config: TfidfConfig, seed: int) -> TfidfModel:
    return fit_tfidf(corpus, max_features=config.max_features, min_df=config.min_df,
                     min_token_len=config.min_token_len, dim=config.dim, seed=seed)


def tfidf_matrix(model: TfidfModel, texts: Sequence[str]) -> sp.csr_matrix:
    """Row-normalized tf*idf weights (float64), one row per text; OOV terms ignored"""
    rows, cols, vals = [], [], []
    for row, text in enumerate(texts):
        counts = Counter(t for t in tokenize(text, model.min_token_len) if t in model.vocabulary)
        for term, tf in counts.items():
            col = model.vocabulary[term]
            rows.append(row)
            cols.append(col)
            vals.append(tf * model.idf[col])
    matrix = sp.csr_matrix((np.asarray(vals, dtype=np.float64), (rows, cols)),
                           shape=(len(texts), model.vocab_size))
    matrix.sum_duplicates()
    matrix.sort_indices()
    norms = np.sqrt(np.asarray(matrix.multiply(matrix).sum(axis=1)).ravel())
    scale = np.divide(1.0, norms, out=np.zeros_like(norms), where=norms > 0)
    return sp.csr_matrix(sp.diags(scale) @ matrix)


def encode_batch(model: TfidfModel, texts: Sequence[str]) -> np.ndarray:
    weights = tfidf_matrix(model, texts)
    if model.projection is None:
        return weights.toarray().astype(np.float32)
    return np.asarray(weights @ model.projection, dtype=np.float64).astype(np.float32)


def encode(model: TfidfModel, text: str) -> np.ndarray:
    return encode_batch(model, [text])[0]
