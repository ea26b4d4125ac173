import os
import threading
import time
from typing import Callable, Optional, Tuple

import httpx
from tenacity import RetryCallState, Retrying, retry_if_exception, stop_after_attempt, wait_exponential_jitter

from ..errors import HttpStatusError, ResponseFormatError, TransportError
from ..logging_config import get_logger, log_error
from .cache import ResponseCache, prompt_hash
from .schemas import LlmConfig

logger = get_logger(__name__)

RETRY_STATUSES = {408, 409, 425, 429, 500, 502, 503, 504}


def _is_transient(error: BaseException) -> bool:
    if isinstance(error, HttpStatusError):
        return error.status_code in RETRY_STATUSES
    return isinstance(error, TransportError) and not isinstance(error, ResponseFormatError)


class LlmClient:
    """Chat-completions client with bounded concurrency and retrying transport.

    ``transport`` is any httpx transport; tests and the offline oracle pass an
    ``httpx.MockTransport``.
    """

    def __init__(self, config: LlmConfig, transport: Optional[httpx.BaseTransport] = None,
                 sleep: Callable[[float], None] = time.sleep, model_name: Optional[str] = None):
        self.config = config
        self.model_name = model_name or config.model_name
        self._http = httpx.Client(transport=transport, timeout=config.timeout)
        self._slots = threading.BoundedSemaphore(config.max_in_flight)
        self._sleep = sleep
        self._counter_lock = threading.Lock()
        self.network_calls = 0
        self.last_attempts = 0

    def __enter__(self) -> "LlmClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def close(self) -> None:
        self._http.close()

    def _headers(self, node_id: Optional[int]) -> dict:
        headers = {"Content-Type": "application/json"}
        api_key = os.getenv(self.config.api_key_env, "").strip()
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        if node_id is not None:
            headers["X-Request-ID"] = f"node-{node_id}"
        return headers

    def _payload(self, prompt: str) -> dict:
        return {
            "model": self.model_name,
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_output_tokens,
            "messages": [{"role": "user", "content": prompt}],
        }

    def _send_once(self, prompt: str, node_id: Optional[int]) -> str:
        with self._counter_lock:
            self.network_calls += 1
        with self._slots:
            try:
                response = self._http.post(self.config.endpoint_url, json=self._payload(prompt),
                                           headers=self._headers(node_id))
            except httpx.HTTPError as e:
                raise TransportError(f"request to {self.config.endpoint_url} failed: {e.__class__.__name__}: {e}")

        if response.status_code >= 400:
            raise HttpStatusError(response.status_code, response.text)
        try:
            content = response.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError):
            raise ResponseFormatError(f"completion payload missing choices[0].message.content: {response.text[:200]}")
        if not isinstance(content, str) or not content.strip():
            raise ResponseFormatError("completion content is empty")
        return content

    def _before_sleep(self, state: RetryCallState) -> None:
        error = state.outcome.exception() if state.outcome else None
        logger.warning(f"LLM request failed, retrying: {error}", extra={
            "attempt": state.attempt_number,
            "error_type": type(error).__name__,
        })

    def query(self, prompt: str, node_id: Optional[int] = None) -> str:
        """Return the assistant message content verbatim"""
        retryer = Retrying(
            stop=stop_after_attempt(self.config.retry_limit + 1),
            wait=wait_exponential_jitter(initial=self.config.backoff_base, exp_base=2,
                                         max=self.config.backoff_max, jitter=self.config.backoff_base),
            retry=retry_if_exception(_is_transient),
            sleep=self._sleep,
            before_sleep=self._before_sleep,
            reraise=True,
        )
        attempts = 0
        try:
            for attempt in retryer:
                with attempt:
                    attempts = attempt.retry_state.attempt_number
                    content = self._send_once(prompt, node_id)
        except TransportError as e:
            log_error(logger, e, {"attempt": attempts, "node_id": node_id}, "llm_query")
            raise
        finally:
            self.last_attempts = attempts
        return content

    def query_cached(self, node_id: int, prompt: str, cache: ResponseCache) -> Tuple[str, bool]:
        digest = prompt_hash(prompt)
        hit = cache.get(node_id, digest, self.model_name)
        if hit is not None:
            return hit.raw_response, True
        raw = self.query(prompt, node_id=node_id)
        cache.put(node_id, digest, self.model_name, raw)
        return raw, False


def query(prompt: str, config: LlmConfig, transport: Optional[httpx.BaseTransport] = None,
          sleep: Callable[[float], None] = time.sleep) -> str:
    with LlmClient(config, transport=transport, sleep=sleep) as client:
        return client.query(prompt)


def query_cached(node_id: int, prompt: str, config: LlmConfig, cache: ResponseCache,
                 transport: Optional[httpx.BaseTransport] = None) -> Tuple[str, bool]:
    with LlmClient(config, transport=transport) as client:
        return client.query_cached(node_id, prompt, cache)
