from typing import Any, Dict, Optional


class TapeError(Exception):
    """Base error; exit_code is what the CLI returns when it escapes a command"""

    exit_code = 1

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.context = context or {}


class ConfigError(TapeError):
    exit_code = 2


class DatasetFormatError(ConfigError):
    """Malformed dataset file; message carries path:line when known"""


class CacheCorruptError(ConfigError):
    def __init__(self, path: str, line_number: int, reason: str):
        super().__init__(f"{path}:{line_number}: corrupt cache entry ({reason})",
                         {"path": path, "line": line_number})
        self.path = path
        self.line_number = line_number


class TransportError(TapeError):
    exit_code = 3


class HttpStatusError(TransportError):
    def __init__(self, status_code: int, body: str):
        super().__init__(f"LLM endpoint returned HTTP {status_code}: {body[:200]}",
                         {"status_code": status_code})
        self.status_code = status_code
        self.body = body


class ResponseFormatError(TransportError):
    pass


class NumericError(TapeError):
    exit_code = 4


class ShapeError(NumericError, ValueError):
    pass
