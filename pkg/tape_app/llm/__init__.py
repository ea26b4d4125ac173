from .cache import ResponseCache, cache_path, prompt_hash
from .client import LlmClient, query, query_cached
from .mock import mock_oracle, oracle_transport
from .parser import match_label, pad_ranked, parse_answer
from .prompting import (build_prompt, builtin_templates, generic_templates, get_template, load_template_file,
                        template_variants)
from .schemas import EnrichmentRecord, LlmConfig, MockConfig, ParseStatus, PromptTemplate

__all__ = [
    "EnrichmentRecord",
    "LlmClient",
    "LlmConfig",
    "MockConfig",
    "ParseStatus",
    "PromptTemplate",
    "ResponseCache",
    "build_prompt",
    "builtin_templates",
    "cache_path",
    "generic_templates",
    "get_template",
    "load_template_file",
    "match_label",
    "mock_oracle",
    "oracle_transport",
    "pad_ranked",
    "parse_answer",
    "prompt_hash",
    "query",
    "query_cached",
    "template_variants",
]
