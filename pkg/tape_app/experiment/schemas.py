from typing import Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator


class MetricSummary(BaseModel):
    mean: float
    std: float
    values: List[float]

    @field_validator("values")
    @classmethod
    def check_range(cls, v):
        if any(not 0.0 <= x <= 1.0 for x in v):
            raise ValueError("accuracies must lie in [0, 1]")
        return v

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "MetricSummary":
        """Mean and sample (n-1) standard deviation; std is 0 for a single value"""
        arr = np.asarray(values, dtype=np.float64)
        std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
        return cls(mean=float(arr.mean()), std=std, values=[float(x) for x in arr])

    def render(self) -> str:
        return f"{self.mean:.4f} ± {self.std:.4f}"


class SplitMetrics(BaseModel):
    val: MetricSummary
    test: MetricSummary


class ExperimentReport(BaseModel):
    dataset: str
    arch: str
    sources: List[str]
    ensemble_mode: str = "logits"
    per_source: Dict[str, SplitMetrics]
    ensemble: SplitMetrics
    seeds: List[int]
    config_hash: str
    timings: Dict[str, float] = Field(default_factory=dict)
    llm_zero_shot: Optional[SplitMetrics] = None
    interpreter: Dict[str, SplitMetrics] = Field(default_factory=dict)
    shallow: Optional[SplitMetrics] = None
    improvements: Dict[str, float] = Field(default_factory=dict)
    left_out: List[str] = Field(default_factory=list)
    deltas: Dict[str, float] = Field(default_factory=dict)


class AblationReport(BaseModel):
    full: ExperimentReport
    rows: List[ExperimentReport]


class PromptSweepRow(BaseModel):
    template_id: str
    accuracy: float = Field(..., ge=0, le=1)
    fallback_rate: float = Field(..., ge=0, le=1)
    num_nodes: int
    network_calls: int = 0


class PromptSweepReport(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    dataset: str
    model_name: str
    sample_seed: int
    rows: List[PromptSweepRow]
