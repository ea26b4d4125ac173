"""Optional embeddings-API encoder (off unless ``encoder.remote_endpoint`` is set).

Request: JSON ``{"model": ..., "input": [texts]}``; response:
``{"data": [{"embedding": [floats]}, ...]}`` in input order. Vectors are
cached per (text hash, model) in a JSON Lines file next to the LLM cache.
"""
import hashlib
import json
import os
import threading
import time
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Union

import httpx
import numpy as np
from tenacity import Retrying, retry_if_exception, stop_after_attempt, wait_exponential_jitter

from ..errors import CacheCorruptError, HttpStatusError, ResponseFormatError, TransportError
from ..llm.client import _is_transient
from ..llm.schemas import LlmConfig
from ..logging_config import get_logger, log_error

logger = get_logger(__name__)


def text_hash(text: str) -> str:
    return hashlib.blake2b(text.encode("utf-8"), digest_size=8).hexdigest()


class EmbeddingCache:
    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        self._vectors: Dict[tuple, List[float]] = {}
        self._lock = threading.Lock()
        if self.path.exists():
            with open(self.path, "r", encoding="utf-8") as handle:
                for line_number, line in enumerate(handle, start=1):
                    if not line.strip():
                        continue
                    try:
                        row = json.loads(line)
                        self._vectors[(row["hash"], row["model"])] = [float(x) for x in row["embedding"]]
                    except (ValueError, KeyError, TypeError) as e:
                        raise CacheCorruptError(str(self.path), line_number, e.__class__.__name__)

    def get(self, digest: str, model: str) -> Optional[List[float]]:
        with self._lock:
            return self._vectors.get((digest, model))

    def put_many(self, rows: Sequence[tuple]) -> None:
        """rows of (digest, model, vector), appended in one write"""
        if not rows:
            return
        payload = "".join(json.dumps({"hash": d, "model": m, "embedding": list(v)}) + "\n" for d, m, v in rows)
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as handle:
                handle.write(payload)
            for d, m, v in rows:
                self._vectors[(d, m)] = list(v)


def _post_batch(http: httpx.Client, endpoint: str, model: str, texts: List[str], api_key_env: str) -> List[List[float]]:
    headers = {"Content-Type": "application/json"}
    api_key = os.getenv(api_key_env, "").strip()
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    try:
        response = http.post(endpoint, json={"model": model, "input": texts}, headers=headers)
    except httpx.HTTPError as e:
        raise TransportError(f"embedding request to {endpoint} failed: {e.__class__.__name__}: {e}")
    if response.status_code >= 400:
        raise HttpStatusError(response.status_code, response.text)
    try:
        vectors = [item["embedding"] for item in response.json()["data"]]
    except (ValueError, KeyError, TypeError):
        raise ResponseFormatError(f"embedding payload missing data[].embedding: {response.text[:200]}")
    if len(vectors) != len(texts):
        raise ResponseFormatError(f"embedding endpoint returned {len(vectors)} vectors for {len(texts)} inputs")
    return vectors


def embed_remote(texts: Sequence[str], endpoint: str, model: str = "text-embedding-3-small",
                 cache: Optional[EmbeddingCache] = None, config: Optional[LlmConfig] = None,
                 transport: Optional[httpx.BaseTransport] = None, batch_size: int = 64,
                 sleep: Callable[[float], None] = time.sleep) -> np.ndarray:
    """N x d float32 embeddings; cached texts never hit the network"""
    config = config or LlmConfig()
    digests = [text_hash(t) for t in texts]
    found: Dict[str, List[float]] = {}
    if cache is not None:
        for digest in digests:
            vector = cache.get(digest, model)
            if vector is not None:
                found[digest] = vector
    missing = list(dict.fromkeys(d for d in digests if d not in found))
    by_digest = {d: t for d, t in zip(digests, texts)}

    retryer_kwargs = dict(
        stop=stop_after_attempt(config.retry_limit + 1),
        wait=wait_exponential_jitter(initial=config.backoff_base, max=config.backoff_max, jitter=config.backoff_base),
        retry=retry_if_exception(_is_transient),
        sleep=sleep,
        reraise=True,
    )
    with httpx.Client(transport=transport, timeout=config.timeout) as http:
        for start in range(0, len(missing), batch_size):
            batch = missing[start:start + batch_size]
            try:
                for attempt in Retrying(**retryer_kwargs):
                    with attempt:
                        vectors = _post_batch(http, endpoint, model, [by_digest[d] for d in batch], config.api_key_env)
            except TransportError as e:
                log_error(logger, e, {"endpoint": endpoint, "batch_start": start}, "embed_remote")
                raise
            found.update(zip(batch, vectors))
            if cache is not None:
                cache.put_many([(d, model, v) for d, v in zip(batch, vectors)])

    logger.info("Remote embeddings ready", extra={"num_texts": len(texts), "network_batches":
                                                  (len(missing) + batch_size - 1) // batch_size})
    if not texts:
        return np.zeros((0, 0), dtype=np.float32)
    matrix = np.asarray([found[d] for d in digests], dtype=np.float64)
    if not np.all(np.isfinite(matrix)):
        raise ResponseFormatError("embedding endpoint returned non-finite values")
    return matrix.astype(np.float32)
