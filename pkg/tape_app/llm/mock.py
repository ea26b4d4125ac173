"""Offline stand-in for the LLM: a seeded oracle with a top-1 accuracy dial."""
import json
import re
from typing import Callable

import httpx

from ..data.graph import UNLABELED, TextAttributedGraph
from ..data.synthetic import FILLER_WORDS
from ..numeric.rng import keyed_generator

AnswerFn = Callable[[int], str]

_STOPWORDS = set(FILLER_WORDS) | {
    "the", "and", "for", "with", "this", "that", "from", "are", "was", "were", "our", "has", "have",
    "its", "into", "than", "which", "these", "those", "their", "such", "can", "also", "been", "not",
}
_WORD = re.compile(r"[a-z0-9]+")


def _pick_keyword(text: str, rng) -> str:
    candidates = [w for w in _WORD.findall(text.lower()) if len(w) > 2 and w not in _STOPWORDS]
    if not candidates:
        return "its content"
    return candidates[int(rng.integers(len(candidates)))]


def mock_oracle(graph: TextAttributedGraph, top1_accuracy: float, k: int, seed: int) -> AnswerFn:
    """Answer generator node_id -> raw response text.

    With probability ``top1_accuracy`` the true class is ranked first, else a
    uniformly random wrong class; the other k-1 ranks are distinct random
    classes. Each node draws from its own keyed stream, so answers do not
    depend on query order.
    """
    if not 0.0 <= top1_accuracy <= 1.0:
        raise ValueError(f"top1_accuracy must be in [0, 1], got {top1_accuracy}")
    num_classes = graph.num_classes
    if not 1 <= k <= num_classes:
        raise ValueError(f"k must be in [1, {num_classes}], got {k}")
    names = graph.label_space.class_names

    def answer(node_id: int) -> str:
        rng = keyed_generator(seed, node_id)
        truth = int(graph.labels[node_id])
        if truth == UNLABELED:
            truth = int(rng.integers(num_classes))
        if rng.random() < top1_accuracy:
            first = truth
        else:
            wrong = [c for c in range(num_classes) if c != truth]
            first = wrong[int(rng.integers(len(wrong)))]
        rest = [c for c in range(num_classes) if c != first]
        ranked = [first] + [rest[i] for i in rng.permutation(len(rest))[:k - 1]]

        text = graph.texts[node_id]
        keyword = _pick_keyword(f"{text.title} {text.abstract}", rng)
        listing = ", ".join(names[c] for c in ranked)
        explanation = (
            f"The paper is most closely related to {names[first]} because it discusses {keyword}, "
            f"which is central to that area. The remaining choices are ordered by decreasing relevance."
        )
        return f"{listing}\n\n{explanation}"

    return answer


def oracle_transport(answer_for: AnswerFn) -> httpx.MockTransport:
    """Chat-completions-shaped transport answering from the oracle.

    The node is identified by the client's ``X-Request-ID: node-<id>`` header.
    """

    def handler(request: httpx.Request) -> httpx.Response:
        request_id = request.headers.get("X-Request-ID", "")
        if not request_id.startswith("node-"):
            return httpx.Response(400, json={"error": "mock oracle needs a node request id"})
        content = answer_for(int(request_id[len("node-"):]))
        body = {"choices": [{"index": 0, "message": {"role": "assistant", "content": content}}]}
        return httpx.Response(200, content=json.dumps(body).encode("utf-8"),
                              headers={"Content-Type": "application/json"})

    return httpx.MockTransport(handler)

