from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class PromptTemplate(BaseModel):
    model_config = ConfigDict(frozen=True)

    template_id: str = Field(..., min_length=1)
    question_text: str = Field(..., min_length=1)
    expected_k: int = Field(..., ge=1)
    title_first: bool = False
    dataset: Optional[str] = None


class LlmConfig(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    endpoint_url: str = "https://api.openai.com/v1/chat/completions"
    model_name: str = "gpt-3.5-turbo"
    temperature: float = Field(0.0, ge=0)
    max_output_tokens: int = Field(512, ge=1)
    max_in_flight: int = Field(4, ge=1)
    retry_limit: int = Field(3, ge=0)
    timeout: float = Field(60.0, gt=0)
    api_key_env: str = "TAPE_API_KEY"
    backoff_base: float = Field(1.0, ge=0)
    backoff_max: float = Field(60.0, ge=0)


class MockConfig(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    enabled: bool = False
    top1_accuracy: float = Field(0.735, ge=0, le=1)
    seed: int = Field(0, ge=0)

    def model_name(self) -> str:
        return f"mock-oracle-p{self.top1_accuracy:g}-s{self.seed}"


class CacheEntry(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    node_id: int = Field(..., ge=0)
    prompt_hash: str = Field(..., pattern=r"^[0-9a-f]{16}$")
    raw_response: str
    model_name: str
    timestamp: float


class ParseStatus(str, Enum):
    FULL = "full"
    PARTIAL = "partial"
    FALLBACK = "fallback"


class EnrichmentRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    node_id: int = Field(..., ge=0)
    ranked: List[int] = Field(default_factory=list)
    explanation: str = ""
    parse_status: ParseStatus

    @model_validator(mode="after")
    def check_ranked(self):
        if len(set(self.ranked)) != len(self.ranked):
            raise ValueError("ranked class indices must be distinct")
        if any(r < 0 for r in self.ranked):
            raise ValueError("ranked class indices must be non-negative")
        if self.parse_status == ParseStatus.FALLBACK and self.ranked:
            raise ValueError("fallback records carry no ranked classes")
        return self


class EnrichedLine(BaseModel):
    """One line of enriched.jsonl"""
    id: str
    ranked: List[str]
    explanation: str
    status: ParseStatus
