import csv
import io
import json
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp
from pydantic import ValidationError

from ..errors import DatasetFormatError
from ..io_utils import atomic_write_json, atomic_write_text, read_json
from ..logging_config import get_logger, log_pipeline_event
from ..numeric.sparse import csr_from_edges
from .graph import UNLABELED, SplitMask, TextAttributedGraph
from .label_spaces import label_space_payload
from .schemas import DatasetManifest, LabelEntry, LabelSpace, NodeText, SplitFile, TextRecord

logger = get_logger(__name__)

PathLike = Union[str, Path]

EDGE_FILE = "edges.tsv"
TEXT_FILE = "texts.jsonl"
LABEL_FILE = "labels.csv"
SPLIT_FILE = "splits.json"
LABEL_SPACE_FILE = "label_space.json"
MANIFEST_FILE = "manifest.json"


def load_label_space(path: PathLike) -> LabelSpace:
    try:
        entries = [LabelEntry.model_validate(e) for e in read_json(path)]
        return LabelSpace.from_entries(entries)
    except (ValidationError, ValueError, TypeError) as e:
        raise DatasetFormatError(f"{path}: invalid label space ({e})")


def _read_texts(path: PathLike) -> Tuple[List[str], List[TextRecord]]:
    ids: List[str] = []
    records: List[TextRecord] = []
    seen = set()
    with open(path, "r", encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = TextRecord.model_validate(json.loads(line))
            except (json.JSONDecodeError, ValidationError) as e:
                raise DatasetFormatError(f"{path}:{line_number}: malformed text record ({e.__class__.__name__})")
            if record.id in seen:
                raise DatasetFormatError(f"{path}:{line_number}: duplicate node id {record.id!r}")
            seen.add(record.id)
            ids.append(record.id)
            records.append(record)
    return ids, records


def _read_edges(path: PathLike) -> List[Tuple[str, str, int]]:
    edges = []
    with open(path, "r", encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            stripped = line.rstrip("\r\n")
            if not stripped.strip() or stripped.lstrip().startswith("#"):
                continue
            parts = stripped.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise DatasetFormatError(f"{path}:{line_number}: expected 'src<TAB>dst', got {stripped!r}")
            edges.append((parts[0].strip(), parts[1].strip(), line_number))
    return edges


def _read_labels(path: PathLike, index: Dict[str, int], label_space: LabelSpace) -> np.ndarray:
    labels = np.full(len(index), UNLABELED, dtype=np.int64)
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["id", "label"]:
            raise DatasetFormatError(f"{path}:1: expected header 'id,label'")
        for line_number, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise DatasetFormatError(f"{path}:{line_number}: expected 2 columns, got {len(row)}")
            node_id, name = row[0].strip(), row[1].strip()
            if node_id not in index:
                raise DatasetFormatError(f"{path}:{line_number}: unknown node id {node_id!r}")
            if not name:
                continue
            class_index = label_space.index_of(name)
            if class_index is None:
                raise DatasetFormatError(f"{path}:{line_number}: label {name!r} not in label space")
            labels[index[node_id]] = class_index
    return labels


def _read_splits(path: PathLike, index: Dict[str, int]) -> SplitMask:
    try:
        split_file = SplitFile.model_validate(read_json(path))
    except (json.JSONDecodeError, ValidationError) as e:
        raise DatasetFormatError(f"{path}: malformed split file ({e.__class__.__name__})")
    parts = {}
    for part in ("train", "val", "test"):
        ids = getattr(split_file, part)
        missing = [i for i in ids if i not in index]
        if missing:
            raise DatasetFormatError(f"{path}: {part} split references unknown ids {missing[:10]}")
        parts[part] = [index[i] for i in ids]
    return SplitMask.from_indices(**parts)


def load_tag_dataset(edge_path: PathLike, text_path: PathLike, label_path: PathLike,
                     label_space: LabelSpace, split_path: Optional[PathLike] = None,
                     name: str = "tag") -> TextAttributedGraph:
    """Load and validate a text-attributed graph from its external file formats.

    Dense node indices follow the order of the text file. Edges are symmetrized
    and deduplicated; self-loops are kept as given.
    """
    ids, records = _read_texts(text_path)
    index = {node_id: i for i, node_id in enumerate(ids)}

    edges = _read_edges(edge_path)
    missing = sorted({e for src, dst, _ in edges for e in (src, dst) if e not in index})
    if missing:
        raise DatasetFormatError(f"{edge_path}: edges reference node ids without text: {missing[:20]}"
                                 + (f" (+{len(missing) - 20} more)" if len(missing) > 20 else ""))
    adjacency = csr_from_edges(len(ids), [index[s] for s, _, _ in edges], [index[d] for _, d, _ in edges])

    labels = _read_labels(label_path, index, label_space)
    texts = tuple(NodeText(node_id=i, title=r.title, abstract=r.abstract) for i, r in enumerate(records))
    splits = _read_splits(split_path, index) if split_path else None

    try:
        graph = TextAttributedGraph(
            adjacency=adjacency,
            texts=texts,
            labels=labels,
            label_space=label_space,
            splits=splits,
            node_ids=tuple(ids),
            name=name,
        ).validate()
    except ValueError as e:
        raise DatasetFormatError(f"{text_path}: {e}")

    log_pipeline_event(logger, "dataset_loaded", {
        "dataset": name,
        "num_nodes": graph.num_nodes,
        "num_edges": graph.num_edges,
        "num_labeled": int(graph.labeled_indices.size),
    })
    return graph


def load_tag_directory(directory: PathLike, label_space: Optional[LabelSpace] = None) -> TextAttributedGraph:
    directory = Path(directory)
    space = label_space or load_label_space(directory / LABEL_SPACE_FILE)
    split_path = directory / SPLIT_FILE
    name = directory.name
    manifest_path = directory / MANIFEST_FILE
    if manifest_path.exists():
        name = DatasetManifest.model_validate(read_json(manifest_path)).name
    return load_tag_dataset(
        directory / EDGE_FILE,
        directory / TEXT_FILE,
        directory / LABEL_FILE,
        space,
        split_path if split_path.exists() else None,
        name=name,
    )


def save_tag_dataset(graph: TextAttributedGraph, directory: PathLike) -> Path:
    """Write the graph in the external file formats plus a manifest"""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    ids = graph.node_ids

    upper = sp.triu(graph.adjacency).tocoo()
    order = np.lexsort((upper.col, upper.row))
    edge_lines = ["# src\tdst"] + [f"{ids[upper.row[i]]}\t{ids[upper.col[i]]}" for i in order]
    atomic_write_text(directory / EDGE_FILE, "\n".join(edge_lines) + "\n")

    text_lines = [
        json.dumps({"id": ids[t.node_id], "title": t.title, "abstract": t.abstract}, ensure_ascii=False)
        for t in graph.texts
    ]
    atomic_write_text(directory / TEXT_FILE, "".join(line + "\n" for line in text_lines))

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["id", "label"])
    for i, label in enumerate(graph.labels):
        if label != UNLABELED:
            writer.writerow([ids[i], graph.label_space.class_names[label]])
    atomic_write_text(directory / LABEL_FILE, buffer.getvalue())

    if graph.splits is not None:
        atomic_write_json(directory / SPLIT_FILE, {
            part: [ids[i] for i in getattr(graph.splits, part)] for part in ("train", "val", "test")
        })
    atomic_write_json(directory / LABEL_SPACE_FILE, label_space_payload(graph.label_space))

    manifest = DatasetManifest(
        name=graph.name,
        num_nodes=graph.num_nodes,
        num_edges=graph.num_edges,
        num_classes=graph.num_classes,
        node_ids=list(ids),
    )
    atomic_write_json(directory / MANIFEST_FILE, manifest.model_dump())
    log_pipeline_event(logger, "dataset_saved", {"dataset": graph.name, "path": str(directory)})
    return directory
