"""Experiment configuration: TOML file + dotted command-line overrides, validated with pydantic.

    [gnn]
    max_epochs = 200

is the same as ``--gnn.max_epochs 200`` on the command line.
"""
import hashlib
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple, Union

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .errors import ConfigError
from .features.schemas import InterpreterConfig, TfidfConfig
from .gnn.schemas import GnnConfig
from .io_utils import atomic_write_json
from .llm.schemas import LlmConfig, MockConfig
from .numeric.rng import SEED_OFFSETS, stage_seed

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

load_dotenv()

PathLike = Union[str, Path]

ALL_SOURCES = ("orig", "expl", "pred")


class DatasetSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = "synthetic"
    directory: Optional[str] = None
    edges: Optional[str] = None
    texts: Optional[str] = None
    labels: Optional[str] = None
    splits: Optional[str] = None
    # builtin label space name or a label-space JSON path
    label_space: Optional[str] = None
    split_ratios: Tuple[float, float, float] = (0.6, 0.2, 0.2)
    synthetic: bool = False
    num_nodes: int = Field(600, ge=2)
    num_classes: int = Field(4, ge=2)
    homophily: float = Field(0.8, ge=0, le=1)
    keywords_per_class: int = Field(20, ge=1)
    seed: int = Field(0, ge=0)


class PromptSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    template_id: str = "generic"
    template_file: Optional[str] = None
    k: Optional[int] = Field(None, ge=1)
    abstract_budget: int = Field(6000, ge=1)
    sweep_sample: int = Field(200, ge=1)
    sweep_templates: List[str] = Field(default_factory=list)


class PredSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    k: Optional[int] = Field(None, ge=1)
    d_P: int = Field(256, ge=1)
    mode: Literal["fixed", "identity", "learned"] = "fixed"


class ExperimentSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    seeds: List[int] = Field(default_factory=lambda: [0], min_length=1)
    sources: List[Literal["orig", "expl", "pred"]] = Field(default_factory=lambda: list(ALL_SOURCES))
    ensemble_mode: Literal["logits", "probs"] = "logits"
    shallow_baseline: bool = False
    save_checkpoints: bool = True
    repair_cache: bool = False
    out_dir: str = "runs/default"
    log_level: str = "INFO"

    @field_validator("seeds")
    @classmethod
    def check_seeds(cls, v):
        if any(s < 0 for s in v):
            raise ValueError("seeds must be non-negative")
        if len(set(v)) != len(v):
            raise ValueError("seeds must be distinct")
        return v


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dataset: DatasetSettings = Field(default_factory=DatasetSettings)
    prompt: PromptSettings = Field(default_factory=PromptSettings)
    llm: LlmConfig = Field(default_factory=LlmConfig)
    mock: MockConfig = Field(default_factory=MockConfig)
    encoder: TfidfConfig = Field(default_factory=TfidfConfig)
    interpreter: InterpreterConfig = Field(default_factory=InterpreterConfig)
    pred: PredSettings = Field(default_factory=PredSettings)
    gnn: GnnConfig = Field(default_factory=GnnConfig)
    experiment: ExperimentSettings = Field(default_factory=ExperimentSettings)

    @property
    def out_dir(self) -> Path:
        return Path(self.experiment.out_dir)


def parse_value(text: str) -> Any:
    """TOML scalar or array when it parses as one, else the raw string"""
    try:
        return tomllib.loads(f"value = {text}")["value"]
    except tomllib.TOMLDecodeError:
        return text


def parse_overrides(args: Sequence[str]) -> List[Tuple[str, Any]]:
    """``--section.key value`` / ``--section.key=value`` pairs"""
    pairs: List[Tuple[str, Any]] = []
    i = 0
    while i < len(args):
        arg = args[i]
        if not arg.startswith("--") or "." not in arg.split("=", 1)[0]:
            raise ConfigError(f"unrecognized argument {arg!r}; overrides look like --section.key value")
        if "=" in arg:
            key, value = arg[2:].split("=", 1)
            i += 1
        else:
            if i + 1 >= len(args):
                raise ConfigError(f"override {arg} is missing a value")
            key, value = arg[2:], args[i + 1]
            i += 2
        pairs.append((key, parse_value(value)))
    return pairs


def apply_overrides(raw: Dict[str, Any], overrides: Sequence[Tuple[str, Any]]) -> Dict[str, Any]:
    for dotted, value in overrides:
        section, _, key = dotted.partition(".")
        if section not in ExperimentConfig.model_fields:
            raise ConfigError(f"unknown config section {section!r} in override {dotted!r}")
        section_model = ExperimentConfig.model_fields[section].annotation
        if key not in section_model.model_fields:
            raise ConfigError(f"unknown key {key!r} in section [{section}]")
        raw.setdefault(section, {})[key] = value
    return raw


def load_config(path: Optional[PathLike] = None, overrides: Sequence[Tuple[str, Any]] = ()) -> ExperimentConfig:
    raw: Dict[str, Any] = {}
    if path is not None:
        try:
            with open(path, "rb") as handle:
                raw = tomllib.load(handle)
        except OSError as e:
            raise ConfigError(f"cannot read config file {path}: {e}")
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"{path}: invalid TOML ({e})")
        for section, values in raw.items():
            if section in ExperimentConfig.model_fields and isinstance(values, dict):
                apply_overrides({}, [(f"{section}.{k}", v) for k, v in values.items()])
    apply_overrides(raw, overrides)
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {e}")


def check_paths(config: ExperimentConfig) -> None:
    """Every referenced input file must exist before a run starts"""
    d = config.dataset
    paths = [d.directory, d.edges, d.texts, d.labels, d.splits, config.prompt.template_file]
    if d.label_space and d.label_space.endswith(".json"):
        paths.append(d.label_space)
    missing = [p for p in paths if p and not Path(p).exists()]
    if missing:
        raise ConfigError(f"referenced files do not exist: {missing}")
    if not d.synthetic and not d.directory and not (d.edges and d.texts and d.labels):
        raise ConfigError("dataset needs synthetic = true, a directory, or edges/texts/labels paths")


def config_hash(config: ExperimentConfig) -> str:
    payload = config.model_dump(mode="json")
    payload["experiment"].pop("out_dir", None)
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def derived_seeds(config: ExperimentConfig) -> Dict[str, Dict[str, int]]:
    return {str(seed): {stage: stage_seed(seed, stage) for stage in SEED_OFFSETS} for seed in config.experiment.seeds}


def write_run_record(config: ExperimentConfig, stages: Sequence[str] = ()) -> Path:
    return atomic_write_json(config.out_dir / "run.json", {
        "config_hash": config_hash(config),
        "config": config.model_dump(mode="json"),
        "seeds": derived_seeds(config),
        "stages": list(stages),
    })
