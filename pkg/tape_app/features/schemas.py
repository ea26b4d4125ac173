from typing import Any, Dict, Literal, Optional

from pydantic import BaseModel, Field, model_validator

FeatureSource = Literal["orig", "expl", "pred", "shallow"]


class TfidfConfig(BaseModel):
    max_features: int = Field(20000, ge=1)
    min_df: int = Field(5, ge=1)
    min_token_len: int = Field(2, ge=1)
    dim: Optional[int] = Field(256, ge=1)
    remote_endpoint: Optional[str] = None
    remote_model: str = "text-embedding-3-small"


class InterpreterConfig(BaseModel):
    hidden_dim: int = Field(256, ge=1)
    learning_rate: float = Field(1e-3, gt=0)
    epochs: int = Field(500, ge=1)
    patience: int = Field(30, ge=0)
    seed: int = Field(0, ge=0)


class PredFeatureConfig(BaseModel):
    k: int = Field(..., ge=1)
    num_classes: int = Field(..., ge=2)
    d_P: int = Field(256, ge=1)
    seed: int = Field(0, ge=0)
    mode: Literal["fixed", "identity", "learned"] = "fixed"

    @property
    def absent_index(self) -> int:
        return self.num_classes

    @property
    def one_hot_width(self) -> int:
        return self.k * (self.num_classes + 1)

    @property
    def output_dim(self) -> int:
        return self.d_P if self.mode == "fixed" else self.one_hot_width

    @model_validator(mode="after")
    def check_identity(self):
        if self.mode == "identity" and self.d_P != self.one_hot_width:
            raise ValueError(f"identity projection needs d_P = k(C+1) = {self.one_hot_width}, got {self.d_P}")
        return self


class FeatureMeta(BaseModel):
    source: FeatureSource
    seed: int
    config_hash: str
    rows: int
    cols: int
    extra: Dict[str, Any] = Field(default_factory=dict)
