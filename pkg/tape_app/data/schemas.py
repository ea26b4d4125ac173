from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing import Dict, List, Optional, Tuple


class NodeText(BaseModel):
    model_config = ConfigDict(frozen=True)

    node_id: int = Field(..., ge=0)
    title: str
    abstract: str


class TextRecord(BaseModel):
    """One line of the text file; both fields must be present, may be empty"""
    id: str
    title: str
    abstract: str

    @field_validator("id", mode="before")
    @classmethod
    def coerce_id(cls, v):
        return str(v) if isinstance(v, int) else v


class LabelEntry(BaseModel):
    name: str = Field(..., min_length=1)
    match: List[str] = Field(default_factory=list)


class LabelSpace(BaseModel):
    model_config = ConfigDict(frozen=True)

    class_names: Tuple[str, ...]
    canonical_forms: Tuple[Tuple[str, ...], ...]

    @model_validator(mode="after")
    def check_bijection(self):
        if len(self.class_names) < 2:
            raise ValueError("a label space needs at least 2 classes")
        if len(self.class_names) != len(self.canonical_forms):
            raise ValueError("class_names and canonical_forms differ in length")
        if len(set(self.class_names)) != len(self.class_names):
            raise ValueError("class names must be unique")
        seen: Dict[str, str] = {}
        for name, forms in zip(self.class_names, self.canonical_forms):
            for form in forms:
                if form != form.lower() or not form.strip():
                    raise ValueError(f"canonical form {form!r} must be nonempty lowercase")
                if form in seen and seen[form] != name:
                    raise ValueError(f"canonical form {form!r} shared by {seen[form]!r} and {name!r}")
                seen[form] = name
        return self

    @classmethod
    def from_entries(cls, entries: List[LabelEntry]) -> "LabelSpace":
        names, forms = [], []
        for entry in entries:
            names.append(entry.name)
            match = [m.lower().strip() for m in entry.match]
            if entry.name.lower() not in match:
                match.insert(0, entry.name.lower())
            forms.append(list(dict.fromkeys(match)))
        return cls(class_names=names, canonical_forms=forms)

    def to_entries(self) -> List[LabelEntry]:
        return [LabelEntry(name=n, match=list(f)) for n, f in zip(self.class_names, self.canonical_forms)]

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    def index_of(self, name: str) -> Optional[int]:
        """Exact display name first, then any canonical form"""
        if name in self.class_names:
            return self.class_names.index(name)
        lowered = name.strip().lower()
        for index, forms in enumerate(self.canonical_forms):
            if lowered in forms:
                return index
        return None


class SplitFile(BaseModel):
    train: List[str] = Field(default_factory=list)
    val: List[str] = Field(default_factory=list)
    test: List[str] = Field(default_factory=list)

    @field_validator("train", "val", "test", mode="before")
    @classmethod
    def coerce_ids(cls, v):
        return [str(x) for x in v]


class DatasetManifest(BaseModel):
    name: str
    num_nodes: int
    num_edges: int
    num_classes: int
    node_ids: List[str]
