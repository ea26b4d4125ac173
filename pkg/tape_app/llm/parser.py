"""Extract ranked class predictions and an explanation from free-form LLM text.

Grammar: the answer opens with a list of label mentions (up to the first
blank line or sentence end) followed by the reasoning. When the opening
segment names no label, the whole text is scanned instead.
"""
import re
from functools import lru_cache
from typing import List, Optional, Pattern, Tuple

from ..data.schemas import LabelSpace
from .schemas import EnrichmentRecord, ParseStatus

_BLANK_LINE = re.compile(r"\n[ \t\r]*\n")
_SENTENCE_END = re.compile(r"(?<=[A-Za-z)\]\"'])[.!?](?=\s|$)")
_ARXIV_TOKEN = re.compile(r"(?<![a-z0-9])cs\.[a-z]{2}(?![a-z0-9])")
_BOUNDARY_LEFT = r"(?<![a-z0-9])"
_BOUNDARY_RIGHT = r"(?![a-z0-9])"


def _form_pattern(form: str) -> str:
    return r"\s+".join(re.escape(part) for part in form.split())


@lru_cache(maxsize=64)
def _compiled(space: LabelSpace) -> Tuple[List[Pattern], Pattern, dict]:
    per_class = [
        re.compile(_BOUNDARY_LEFT + "(?:" + "|".join(_form_pattern(f) for f in sorted(forms, key=len, reverse=True))
                   + ")" + _BOUNDARY_RIGHT)
        for forms in space.canonical_forms
    ]
    form_to_class = {}
    for index, forms in enumerate(space.canonical_forms):
        for form in forms:
            form_to_class.setdefault(" ".join(form.split()), index)
    every = sorted(form_to_class, key=len, reverse=True)
    combined = re.compile(_BOUNDARY_LEFT + "(" + "|".join(_form_pattern(f) for f in every) + ")" + _BOUNDARY_RIGHT)
    return per_class, combined, form_to_class


def match_label(token_window: str, label_space: LabelSpace) -> Optional[int]:
    """First class (in class order) with a whole-token mention in the window"""
    lowered = token_window.lower()
    per_class, _, form_to_class = _compiled(label_space)
    for index, pattern in enumerate(per_class):
        if pattern.search(lowered):
            return index
    for token in _ARXIV_TOKEN.findall(lowered):
        if token in form_to_class:
            return form_to_class[token]
    return None


def _mentions(lowered: str, label_space: LabelSpace) -> List[int]:
    """Class indices in order of appearance, first occurrence wins"""
    _, combined, form_to_class = _compiled(label_space)
    found: List[Tuple[int, int]] = []
    for m in combined.finditer(lowered):
        found.append((m.start(), form_to_class[" ".join(m.group(1).split())]))
    for m in _ARXIV_TOKEN.finditer(lowered):
        if m.group(0) in form_to_class:
            found.append((m.start(), form_to_class[m.group(0)]))
    found.sort(key=lambda item: item[0])
    return list(dict.fromkeys(index for _, index in found))


def _head_end(text: str) -> int:
    start = len(text) - len(text.lstrip())
    ends = [len(text)]
    blank = _BLANK_LINE.search(text, start)
    if blank:
        ends.append(blank.start())
    sentence = _SENTENCE_END.search(text, start)
    if sentence:
        ends.append(sentence.end())
    return min(ends)


def parse_answer(raw: str, label_space: LabelSpace, k: int, node_id: int = 0) -> EnrichmentRecord:
    """Total parse; status fallback when no label is found anywhere"""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    head_end = _head_end(raw)
    ranked = _mentions(raw[:head_end].lower(), label_space)[:k]
    if ranked:
        return EnrichmentRecord(node_id=node_id, ranked=ranked, explanation=raw[head_end:].strip(),
                                parse_status=ParseStatus.FULL)

    ranked = _mentions(raw.lower(), label_space)[:k]
    if ranked:
        return EnrichmentRecord(node_id=node_id, ranked=ranked, explanation=raw, parse_status=ParseStatus.PARTIAL)
    return EnrichmentRecord(node_id=node_id, ranked=[], explanation=raw, parse_status=ParseStatus.FALLBACK)


def pad_ranked(record: EnrichmentRecord, k: int, absent_index: int, strategy: str = "absent") -> List[int]:
    """Exactly k class indices; missing ranks take the reserved absent index"""
    if strategy != "absent":
        raise ValueError(f"unknown padding strategy {strategy!r}")
    if len(record.ranked) > k:
        raise ValueError(f"record has {len(record.ranked)} ranked classes, more than k={k}")
    return list(record.ranked) + [absent_index] * (k - len(record.ranked))
