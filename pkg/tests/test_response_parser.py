import numpy as np
import pytest

from tape_app.data import NodeText, TextAttributedGraph, builtin_label_space
from tape_app.data.synthetic import synthetic_label_space
from tape_app.llm import ParseStatus, match_label, mock_oracle, pad_ranked, parse_answer
from tape_app.llm.schemas import EnrichmentRecord
from tape_app.numeric.sparse import csr_from_edges

ARXIV = builtin_label_space("ogbn-arxiv")
CORA = builtin_label_space("cora")
PUBMED = builtin_label_space("pubmed")
TOPICS = synthetic_label_space(5)

FULL, PARTIAL, FALLBACK = ParseStatus.FULL, ParseStatus.PARTIAL, ParseStatus.FALLBACK

# (raw response, label space, k, expected class names in rank order, expected status)
FIXTURES = [
    ("cs.CV, cs.LG, cs.AI, cs.IR, cs.CL\n\nThe paper discusses convolutional detectors.", ARXIV, 5,
     ["cs.CV", "cs.LG", "cs.AI", "cs.IR", "cs.CL"], FULL),
    ("cs.LG, cs.AI\n\nIt trains a network.", ARXIV, 5, ["cs.LG", "cs.AI"], FULL),
    ("cs.lg, CS.AI, cs.ne\n\nMixed case identifiers.", ARXIV, 5, ["cs.LG", "cs.AI", "cs.NE"], FULL),
    ("cs.CV, cs.LG, cs.AI, cs.IR, cs.CL", ARXIV, 3, ["cs.CV", "cs.LG", "cs.AI"], FULL),
    ("1. cs.CL\n2. cs.IR\n3. cs.LG\n\nReasoning follows.", ARXIV, 5, ["cs.CL", "cs.IR", "cs.LG"], FULL),
    ("cs.LG, cs.LG, cs.AI\n\nRepeated mention.", ARXIV, 5, ["cs.LG", "cs.AI"], FULL),
    ("The most likely categories are cs.CV and cs.LG. The paper studies detection.", ARXIV, 5,
     ["cs.CV", "cs.LG"], FULL),
    ("cs.lgx and cs.aix are made up", ARXIV, 5, [], FALLBACK),
    ("I believe this is about computer vision.\n\nMost likely cs.CV, then cs.LG.", ARXIV, 5,
     ["cs.CV", "cs.LG"], PARTIAL),
    ("Answer: cs.SI\n\nSocial networks.", ARXIV, 5, ["cs.SI"], FULL),
    ("", ARXIV, 5, [], FALLBACK),
    ("   \n\n  cs.DS, cs.DM\n\nA proof about graphs.", ARXIV, 5, ["cs.DS", "cs.DM"], FULL),
    ("(cs.CL), [cs.IR]\n\nBrackets are fine.", ARXIV, 5, ["cs.CL", "cs.IR"], FULL),
    ("Neural Networks, Probabilistic Methods\n\nThe paper trains a belief network.", CORA, 7,
     ["Neural Networks", "Probabilistic Methods"], FULL),
    ("neural networks, theory, rule learning\n\nlowercase list", CORA, 7,
     ["Neural Networks", "Theory", "Rule Learning"], FULL),
    ("Reinforcement Learning. It uses Q-learning to control a robot.", CORA, 7, ["Reinforcement Learning"], FULL),
    ("Case Based\nGenetic Algorithms\n\nOne per line.", CORA, 7, ["Case Based", "Genetic Algorithms"], FULL),
    ("Neural\nNetworks, Theory\n\nA wrapped line.", CORA, 7, ["Neural Networks", "Theory"], FULL),
    ("Neural Networkss", CORA, 7, [], FALLBACK),
    ("This paper is about learning.", CORA, 7, [], FALLBACK),
    ("The answer is unclear\n\nbut likely Theory or Case Based", CORA, 7, ["Theory", "Case Based"], PARTIAL),
    ("Theory", CORA, 1, ["Theory"], FULL),
    ("Genetic Algorithms, Neural Networks, Theory", CORA, 2, ["Genetic Algorithms", "Neural Networks"], FULL),
    ("Type 2 diabetes, Type 1 diabetes\n\nThe study uses db/db mice.", PUBMED, 3,
     ["Type 2 diabetes", "Type 1 diabetes"], FULL),
    ("Experimentally induced diabetes\n\nStreptozotocin was administered.", PUBMED, 3,
     ["Experimentally induced diabetes"], FULL),
    ("experimental induced diabetes, type 1 diabetes\n\nAlloxan model.", PUBMED, 3,
     ["Experimentally induced diabetes", "Type 1 diabetes"], FULL),
    ("Type II diabetes.\nInsulin resistance in adults.", PUBMED, 3, ["Type 2 diabetes"], FULL),
    ("Type 3 diabetes\n\nNot a real category.", PUBMED, 3, [], FALLBACK),
    ("I cannot determine the category.", PUBMED, 3, [], FALLBACK),
    ("Topic Beta, Topic Alpha, Topic Delta\n\nThe paper is most closely related to Topic Beta.", TOPICS, 3,
     ["Topic Beta", "Topic Alpha", "Topic Delta"], FULL),
    ("Topic Alphabet", TOPICS, 3, [], FALLBACK),
    ("TOPIC GAMMA!\n more text", TOPICS, 3, ["Topic Gamma"], FULL),
    ("\x00\x01 ### �", TOPICS, 3, [], FALLBACK),
]


@pytest.mark.parametrize("raw,space,k,expected,status", FIXTURES)
def test_fixture_corpus(raw, space, k, expected, status):
    record = parse_answer(raw, space, k, node_id=5)
    assert record.node_id == 5
    assert [space.class_names[c] for c in record.ranked] == expected
    assert record.parse_status == status
    if status != FULL:
        assert record.explanation == raw


def test_full_parse_explanation_is_the_remainder():
    record = parse_answer("cs.CV, cs.LG, cs.AI, cs.IR, cs.CL\n\nThe paper discusses detection.  ", ARXIV, 5)
    assert record.explanation == "The paper discusses detection."
    sentence = parse_answer("Reinforcement Learning. It uses Q-learning.", CORA, 7)
    assert sentence.explanation == "It uses Q-learning."


def test_k_must_be_positive():
    with pytest.raises(ValueError):
        parse_answer("Theory", CORA, 0)


@pytest.mark.parametrize("seed", range(300))
def test_fuzz_never_raises(seed):
    rng = np.random.default_rng(seed)
    raw = bytes(rng.integers(0, 256, size=int(rng.integers(0, 200)), dtype=np.uint8)).decode("utf-8", "replace")
    space = (ARXIV, CORA, PUBMED, TOPICS)[seed % 4]
    record = parse_answer(raw, space, 3)
    assert len(record.ranked) <= 3
    assert all(0 <= c < space.num_classes for c in record.ranked)
    if record.parse_status == FALLBACK:
        assert record.ranked == [] and record.explanation == raw


def oracle_graph(num_nodes, space, seed):
    labels = np.random.default_rng(seed).integers(0, space.num_classes, size=num_nodes)
    return TextAttributedGraph(
        adjacency=csr_from_edges(num_nodes, [], []),
        texts=tuple(NodeText(node_id=i, title=f"Paper {i}", abstract="spectral filters for citation graphs")
                    for i in range(num_nodes)),
        labels=labels,
        label_space=space,
    )


@pytest.mark.parametrize("space,k", [(synthetic_label_space(6), 4), (ARXIV, 5), (CORA, 3)])
def test_mock_round_trip_is_exact(space, k):
    graph = oracle_graph(1000, space, seed=1)
    answer = mock_oracle(graph, 0.735, k, seed=2)
    for node in range(graph.num_nodes):
        raw = answer(node)
        listed = [space.class_names.index(name) for name in raw.split("\n\n", 1)[0].split(", ")]
        record = parse_answer(raw, space, k, node_id=node)
        assert record.parse_status == FULL
        assert record.ranked == listed
        assert record.explanation.startswith("The paper is most closely related to")


def test_match_label():
    assert match_label("cs.LG", ARXIV) == ARXIV.class_names.index("cs.LG")
    assert match_label("we use neural networks here", CORA) == CORA.class_names.index("Neural Networks")
    assert match_label("cs.lgx", ARXIV) is None
    assert match_label("nothing relevant", CORA) is None
    # first class in class order wins, not first in the text
    assert match_label("Theory and Case Based", CORA) == 0


def test_pad_ranked():
    absent = CORA.num_classes
    record = EnrichmentRecord(node_id=0, ranked=[3], parse_status=FULL)
    assert pad_ranked(record, 3, absent) == [3, absent, absent]
    full = EnrichmentRecord(node_id=0, ranked=[2, 0, 5], parse_status=FULL)
    assert pad_ranked(full, 3, absent) == [2, 0, 5]
    fallback = EnrichmentRecord(node_id=0, ranked=[], parse_status=FALLBACK, explanation="?")
    assert pad_ranked(fallback, 4, absent) == [absent] * 4
    with pytest.raises(ValueError):
        pad_ranked(full, 2, absent)
    with pytest.raises(ValueError):
        pad_ranked(record, 3, absent, strategy="zeros")


def test_record_invariants():
    with pytest.raises(ValueError):
        EnrichmentRecord(node_id=0, ranked=[1, 1], parse_status=FULL)
    with pytest.raises(ValueError):
        EnrichmentRecord(node_id=0, ranked=[1], parse_status=FALLBACK)
