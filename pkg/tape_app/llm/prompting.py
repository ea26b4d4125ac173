import json
from pathlib import Path
from typing import Dict, List, Optional, Union

from pydantic import ValidationError

from ..data.schemas import LabelSpace, NodeText
from ..errors import ConfigError
from .schemas import PromptTemplate

DEFAULT_ABSTRACT_BUDGET = 6000

_CORA_QUESTION = (
    "Which of the following sub-categories of AI does this paper belong to: Case Based, Genetic Algorithms, "
    "Neural Networks, Probabilistic Methods, Reinforcement Learning, Rule Learning, Theory? If multiple options "
    "apply, provide a comma-separated list ordered from most to least related, then for each choice you gave, "
    "explain how it is present in the text."
)

_PUBMED_QUESTION = (
    "Does the paper involve any cases of Type 1 diabetes, Type 2 diabetes, or Experimentally induced diabetes? "
    "Please give one or more answers of either Type 1 diabetes, Type 2 diabetes, or Experimentally induced "
    "diabetes; if multiple options apply, provide a comma-separated list ordered from most to least related, "
    "then for each choice you gave, give a detailed explanation with quotes from the text explaining why it is "
    "related to the chosen option."
)

_ARXIV_ASK = (
    "Which arXiv CS sub-category does this paper belong to? Give 5 likely arXiv CS sub-categories as a "
    "comma-separated list ordered from most to least likely, in the form \"cs.XX\""
)


def builtin_templates() -> List[PromptTemplate]:
    return [
        PromptTemplate(template_id="cora", question_text=_CORA_QUESTION, expected_k=7, dataset="cora"),
        PromptTemplate(template_id="pubmed", question_text=_PUBMED_QUESTION, expected_k=3, dataset="pubmed"),
        PromptTemplate(template_id="ogbn-arxiv", question_text=_ARXIV_ASK + ", and provide your reasoning.",
                       expected_k=5, dataset="ogbn-arxiv"),
        PromptTemplate(template_id="ogbn-arxiv-title-first",
                       question_text=_ARXIV_ASK + ", and provide your reasoning.",
                       expected_k=5, title_first=True, dataset="ogbn-arxiv"),
        PromptTemplate(template_id="ogbn-arxiv-focus-on-text",
                       question_text=_ARXIV_ASK + ". Focus only on content in the actual text and avoid making "
                                                  "false associations. Then provide your reasoning.",
                       expected_k=5, title_first=True, dataset="ogbn-arxiv"),
        PromptTemplate(template_id="ogbn-arxiv-chain-of-thought",
                       question_text=_ARXIV_ASK + ". Please think about the categorization in a step by step "
                                                  "manner and avoid making false associations. Then provide your "
                                                  "reasoning.",
                       expected_k=5, title_first=True, dataset="ogbn-arxiv"),
    ]


def generic_templates(label_space: LabelSpace, k: Optional[int] = None) -> List[PromptTemplate]:
    """Templates for any label space: the default plus its three wording variants"""
    k = min(k or 3, label_space.num_classes)
    names = ", ".join(label_space.class_names)
    ask = (f"Which of the following categories does this paper belong to: {names}? Give {k} likely categories "
           f"as a comma-separated list ordered from most to least likely")
    return [
        PromptTemplate(template_id="generic", question_text=ask + ", and provide your reasoning.",
                       expected_k=k, dataset="generic"),
        PromptTemplate(template_id="generic-title-first", question_text=ask + ", and provide your reasoning.",
                       expected_k=k, title_first=True, dataset="generic"),
        PromptTemplate(template_id="generic-focus-on-text",
                       question_text=ask + ". Focus only on content in the actual text and avoid making false "
                                           "associations. Then provide your reasoning.",
                       expected_k=k, title_first=True, dataset="generic"),
        PromptTemplate(template_id="generic-chain-of-thought",
                       question_text=ask + ". Please think about the categorization in a step by step manner and "
                                           "avoid making false associations. Then provide your reasoning.",
                       expected_k=k, title_first=True, dataset="generic"),
    ]


def template_variants(dataset: str, extra: Optional[List[PromptTemplate]] = None) -> List[PromptTemplate]:
    """Every template for one dataset, default first"""
    pool = builtin_templates() + list(extra or [])
    return [t for t in pool if t.dataset == dataset or t.template_id == dataset]


def get_template(template_id: str, extra: Optional[List[PromptTemplate]] = None) -> PromptTemplate:
    registry: Dict[str, PromptTemplate] = {t.template_id: t for t in builtin_templates()}
    registry.update({t.template_id: t for t in extra or []})
    if template_id not in registry:
        raise ConfigError(f"unknown prompt template {template_id!r}; known: {sorted(registry)}")
    return registry[template_id]


def load_template_file(path: Union[str, Path]) -> List[PromptTemplate]:
    """A JSON object or list of objects with template_id, question_text, expected_k"""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            payload = json.load(handle)
        items = payload if isinstance(payload, list) else [payload]
        return [PromptTemplate.model_validate(item) for item in items]
    except (OSError, json.JSONDecodeError, ValidationError) as e:
        raise ConfigError(f"{path}: invalid prompt template file ({e.__class__.__name__}: {e})")


def truncate_abstract(abstract: str, budget: int = DEFAULT_ABSTRACT_BUDGET) -> str:
    """Cut at the last whitespace before the character budget"""
    if len(abstract) <= budget:
        return abstract
    head = abstract[:budget]
    cut = next((i for i in range(len(head) - 1, -1, -1) if head[i].isspace()), -1)
    return head[:cut].rstrip() if cut > 0 else head


def build_prompt(text: NodeText, template: PromptTemplate, abstract_budget: int = DEFAULT_ABSTRACT_BUDGET) -> str:
    abstract = truncate_abstract(text.abstract, abstract_budget)
    lines = [f"Abstract: {abstract}", f"Title: {text.title}"]
    if template.title_first:
        lines.reverse()
    return "\n".join(lines) + f"\nQuestion: {template.question_text}\n\nAnswer:"
