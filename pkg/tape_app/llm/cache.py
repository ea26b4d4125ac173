import hashlib
import json
import threading
import time
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

from pydantic import ValidationError

from ..errors import CacheCorruptError
from ..logging_config import get_logger
from .schemas import CacheEntry

logger = get_logger(__name__)

CacheKey = Tuple[int, str, str]


def prompt_hash(prompt: str) -> str:
    """64-bit hex digest of the UTF-8 prompt bytes"""
    return hashlib.blake2b(prompt.encode("utf-8"), digest_size=8).hexdigest()


def cache_path(cache_dir: Union[str, Path], dataset: str, template_id: str) -> Path:
    return Path(cache_dir) / f"{dataset}__{template_id}.jsonl"


class ResponseCache:
    """Append-only JSON Lines store of raw LLM responses.

    Reads are served from memory; appends are serialized and each entry goes
    out in a single write call so concurrent writers never interleave lines.
    """

    def __init__(self, path: Union[str, Path], repair: bool = False):
        self.path = Path(path)
        self.repair = repair
        self._entries: Dict[CacheKey, CacheEntry] = {}
        self._lock = threading.Lock()
        self.skipped_lines = 0
        self._load()

    def _load(self) -> None:
        if not self.path.exists():
            return
        with open(self.path, "r", encoding="utf-8") as handle:
            for line_number, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                try:
                    entry = CacheEntry.model_validate(json.loads(line))
                except (json.JSONDecodeError, ValidationError) as e:
                    if not self.repair:
                        raise CacheCorruptError(str(self.path), line_number, e.__class__.__name__)
                    self.skipped_lines += 1
                    logger.warning(f"Skipping corrupt cache line {line_number}",
                                   extra={"cache_path": str(self.path), "line_number": line_number})
                    continue
                self._entries.setdefault((entry.node_id, entry.prompt_hash, entry.model_name), entry)
        logger.debug(f"Cache loaded with {len(self._entries)} entries", extra={"cache_path": str(self.path)})

    def get(self, node_id: int, digest: str, model_name: str) -> Optional[CacheEntry]:
        with self._lock:
            return self._entries.get((node_id, digest, model_name))

    def put(self, node_id: int, digest: str, model_name: str, raw_response: str) -> CacheEntry:
        entry = CacheEntry(
            node_id=node_id,
            prompt_hash=digest,
            raw_response=raw_response,
            model_name=model_name,
            timestamp=time.time(),
        )
        line = json.dumps(entry.model_dump(), ensure_ascii=False) + "\n"
        with self._lock:
            key = (node_id, digest, model_name)
            if key in self._entries:
                return self._entries[key]
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as handle:
                handle.write(line)
                handle.flush()
            self._entries[key] = entry
        return entry

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)
