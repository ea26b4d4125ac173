from typing import Dict, List

from ..errors import ConfigError
from .schemas import LabelEntry, LabelSpace

CORA_CLASSES = [
    "Case Based",
    "Genetic Algorithms",
    "Neural Networks",
    "Probabilistic Methods",
    "Reinforcement Learning",
    "Rule Learning",
    "Theory",
]

PUBMED_CLASSES = [
    ("Experimentally induced diabetes", ["experimentally induced diabetes", "experimental induced diabetes"]),
    ("Type 1 diabetes", ["type 1 diabetes", "type i diabetes"]),
    ("Type 2 diabetes", ["type 2 diabetes", "type ii diabetes"]),
]

# OGB label index order
ARXIV_CLASSES = [
    "cs.NA", "cs.MM", "cs.LO", "cs.CY", "cs.CR", "cs.DC", "cs.HC", "cs.CE", "cs.NI", "cs.CC",
    "cs.AI", "cs.MA", "cs.GL", "cs.NE", "cs.SC", "cs.AR", "cs.CV", "cs.GR", "cs.ET", "cs.SY",
    "cs.CG", "cs.OH", "cs.PL", "cs.SE", "cs.LG", "cs.SD", "cs.SI", "cs.RO", "cs.IT", "cs.PF",
    "cs.CL", "cs.IR", "cs.MS", "cs.FL", "cs.DS", "cs.OS", "cs.GT", "cs.DB", "cs.DL", "cs.DM",
]


def _cora() -> LabelSpace:
    return LabelSpace.from_entries([LabelEntry(name=n, match=[n.lower()]) for n in CORA_CLASSES])


def _pubmed() -> LabelSpace:
    return LabelSpace.from_entries([LabelEntry(name=n, match=m) for n, m in PUBMED_CLASSES])


def _arxiv() -> LabelSpace:
    return LabelSpace.from_entries([LabelEntry(name=n, match=[n.lower()]) for n in ARXIV_CLASSES])


_BUILTIN = {
    "cora": _cora,
    "pubmed": _pubmed,
    "ogbn-arxiv": _arxiv,
}


def builtin_label_space(name: str) -> LabelSpace:
    try:
        return _BUILTIN[name]()
    except KeyError:
        raise ConfigError(f"no built-in label space named {name!r}; known: {sorted(_BUILTIN)}")


def builtin_label_space_names() -> List[str]:
    return sorted(_BUILTIN)


def label_space_payload(space: LabelSpace) -> List[Dict]:
    return [e.model_dump() for e in space.to_entries()]
