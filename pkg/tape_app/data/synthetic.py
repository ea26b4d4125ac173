"""Planted-partition text-attributed graphs for desk-scale experiments.

Classes get slightly unequal sizes, edges are drawn so that a `homophily`
fraction connects same-class nodes, and every node's text mixes a few
class-planted keywords into shared filler vocabulary.
"""
from typing import List, Optional

import numpy as np

from ..errors import ConfigError
from ..logging_config import get_logger, log_pipeline_event
from ..numeric.sparse import csr_from_edges
from .graph import TextAttributedGraph
from .schemas import LabelEntry, LabelSpace, NodeText
from .splits import split_nodes

logger = get_logger(__name__)

_SYLLABLES = ["ka", "lo", "mi", "ren", "sha", "tor", "vel", "zu", "pra", "din", "quo", "bex",
              "nul", "fai", "gor", "wen"]

FILLER_WORDS = [
    "analysis", "approach", "method", "results", "model", "data", "study", "propose", "novel",
    "framework", "performance", "evaluate", "experiments", "demonstrate", "based", "using",
    "problem", "paper", "present", "show", "efficient", "algorithm", "system", "learning",
    "structure", "information", "network", "general", "large", "significant", "improve",
    "existing", "provide", "effective", "techniques", "applications", "design", "process",
    "theory", "empirical", "previous", "several", "important", "different", "simple",
    "robust", "accurate", "observed", "measure", "context",
]


def planted_keyword(class_index: int, j: int, keywords_per_class: int) -> str:
    word_id = class_index * keywords_per_class + j
    base = len(_SYLLABLES)
    return _SYLLABLES[word_id % base] + _SYLLABLES[(word_id // base) % base] + _SYLLABLES[(word_id // base ** 2) % base]


_GREEK = ["Alpha", "Beta", "Gamma", "Delta", "Epsilon", "Zeta", "Eta", "Theta", "Iota", "Kappa", "Lambda", "Mu",
          "Nu", "Xi", "Omicron", "Pi", "Rho", "Sigma", "Tau", "Upsilon", "Phi", "Chi", "Psi", "Omega"]


def synthetic_class_name(index: int) -> str:
    if index < len(_GREEK):
        return f"Topic {_GREEK[index]}"
    return f"Topic {_GREEK[index % len(_GREEK)]} {index // len(_GREEK) + 1}"


def synthetic_label_space(num_classes: int) -> LabelSpace:
    return LabelSpace.from_entries([LabelEntry(name=synthetic_class_name(c)) for c in range(num_classes)])


def _class_sizes(num_nodes: int, num_classes: int) -> np.ndarray:
    # linearly decreasing weights; class 0 is the majority
    weights = 1.0 + (num_classes - 1 - np.arange(num_classes)) / num_classes
    raw = weights / weights.sum() * num_nodes
    sizes = np.maximum(np.floor(raw).astype(np.int64), 1)
    while sizes.sum() < num_nodes:
        sizes[np.argmax(raw - sizes)] += 1
    while sizes.sum() > num_nodes:
        sizes[np.argmax(sizes)] -= 1
    return sizes


def _draw_edges(labels: np.ndarray, num_edges: int, homophily: float, rng: np.random.Generator):
    num_nodes = labels.size
    members = [np.flatnonzero(labels == c) for c in range(labels.max() + 1)]
    intra_ok = np.flatnonzero([members[labels[u]].size >= 2 for u in range(num_nodes)])
    max_intra = sum(m.size * (m.size - 1) // 2 for m in members)
    max_inter = num_nodes * (num_nodes - 1) // 2 - max_intra
    target_intra = int(round(num_edges * homophily))
    target_inter = num_edges - target_intra
    target_intra = min(target_intra, max_intra)
    target_inter = min(target_inter, max_inter)

    edges = set()

    def fill(count: int, intra: bool):
        added = 0
        while added < count:
            if intra:
                u = int(rng.choice(intra_ok))
                pool = members[labels[u]]
            else:
                u = int(rng.integers(num_nodes))
                pool = np.flatnonzero(labels != labels[u])
            v = int(pool[rng.integers(pool.size)])
            if u == v:
                continue
            pair = (min(u, v), max(u, v))
            if pair in edges:
                continue
            edges.add(pair)
            added += 1

    if target_intra and intra_ok.size:
        fill(target_intra, intra=True)
    if target_inter:
        fill(target_inter, intra=False)
    ordered = sorted(edges)
    return [u for u, _ in ordered], [v for _, v in ordered]


def _node_text(label: int, num_classes: int, keywords_per_class: int, planted_per_node: int,
               keyword_purity: float, words_per_abstract: int, rng: np.random.Generator):
    planted: List[str] = []
    for _ in range(planted_per_node):
        if rng.random() < keyword_purity:
            c = label
        else:
            c = int(rng.integers(num_classes))
        planted.append(planted_keyword(c, int(rng.integers(keywords_per_class)), keywords_per_class))
    filler = [FILLER_WORDS[i] for i in rng.integers(len(FILLER_WORDS), size=words_per_abstract)]
    title_words = [FILLER_WORDS[i] for i in rng.integers(len(FILLER_WORDS), size=5)] + [planted[0]]
    slots = rng.permutation(words_per_abstract + len(planted) - 1)[:len(planted) - 1]
    body = list(filler)
    for slot, word in sorted(zip(slots.tolist(), planted[1:])):
        body.insert(min(slot, len(body)), word)
    title = " ".join(title_words[i] for i in rng.permutation(len(title_words))).capitalize()
    abstract = " ".join(body).capitalize() + "."
    return title, abstract


def make_synthetic_tag(num_nodes: int, num_classes: int, homophily: float, keywords_per_class: int,
                       seed: int, avg_degree: float = 4.0, planted_per_node: int = 3,
                       keyword_purity: float = 0.4, words_per_abstract: int = 40,
                       label_space: Optional[LabelSpace] = None, with_splits: bool = True,
                       name: str = "synthetic") -> TextAttributedGraph:
    """Deterministic synthetic TAG; measured edge homophily tracks `homophily`"""
    if num_classes < 2 or num_nodes < num_classes:
        raise ConfigError(f"need num_nodes >= num_classes >= 2, got {num_nodes}, {num_classes}")
    if not 0.0 <= homophily <= 1.0:
        raise ConfigError(f"homophily must be in [0, 1], got {homophily}")
    if keywords_per_class < 1 or planted_per_node < 1:
        raise ConfigError("keywords_per_class and planted_per_node must be >= 1")
    if label_space is not None and label_space.num_classes != num_classes:
        raise ConfigError("label_space size does not match num_classes")

    rng = np.random.default_rng(seed)
    sizes = _class_sizes(num_nodes, num_classes)
    labels = rng.permutation(np.repeat(np.arange(num_classes), sizes)).astype(np.int64)

    num_edges = int(round(num_nodes * avg_degree / 2))
    src, dst = _draw_edges(labels, num_edges, homophily, rng)
    adjacency = csr_from_edges(num_nodes, src, dst)

    texts = []
    for i in range(num_nodes):
        title, abstract = _node_text(int(labels[i]), num_classes, keywords_per_class, planted_per_node,
                                     keyword_purity, words_per_abstract, rng)
        texts.append(NodeText(node_id=i, title=title, abstract=abstract))

    graph = TextAttributedGraph(
        adjacency=adjacency,
        texts=tuple(texts),
        labels=labels,
        label_space=label_space or synthetic_label_space(num_classes),
        node_ids=tuple(f"n{i}" for i in range(num_nodes)),
        name=name,
    )
    if with_splits:
        graph = graph.with_splits(split_nodes(graph, seed=seed))
    graph.validate()

    log_pipeline_event(logger, "synthetic_generated", {
        "dataset": name,
        "num_nodes": num_nodes,
        "num_edges": graph.num_edges,
        "seed": seed,
    })
    return graph

