import logging
import logging.config
import json
import os
import traceback
from datetime import datetime, timezone
from typing import Dict, Any, Optional

# attributes every LogRecord has; anything else came in through extra=
_RESERVED = set(vars(logging.LogRecord("", 0, "", 0, "", None, None))) | {"message", "asctime"}


class JSONFormatter(logging.Formatter):
    """JSON formatter for structured pipeline logs"""

    def format(self, record: logging.LogRecord) -> str:
        log_entry = {
            "timestamp": datetime.now(timezone.utc).isoformat().replace("+00:00", "Z"),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno,
        }

        # Add extra fields if present
        for key, value in vars(record).items():
            if key not in _RESERVED:
                log_entry[key] = value

        if record.exc_info:
            log_entry["exception"] = self.formatException(record.exc_info)

        return json.dumps(log_entry, ensure_ascii=False, default=str)


def setup_logging(log_dir: str = "logs", level: str = "INFO"):
    """Setup logging configuration"""
    os.makedirs(log_dir, exist_ok=True)

    LOGGING_CONFIG = {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "json": {
                "()": JSONFormatter,
            },
            "standard": {
                "format": "%(asctime)s [%(levelname)s] %(name)s: %(message)s"
            },
        },
        "handlers": {
            "console": {
                "level": level,
                "class": "logging.StreamHandler",
                "formatter": "standard",
                "stream": "ext://sys.stderr",
            },
            "file": {
                "level": "DEBUG",
                "class": "logging.handlers.RotatingFileHandler",
                "formatter": "json",
                "filename": os.path.join(log_dir, "tape.log"),
                "maxBytes": 10485760,  # 10MB
                "backupCount": 5,
                "encoding": "utf8",
            },
            "error_file": {
                "level": "ERROR",
                "class": "logging.handlers.RotatingFileHandler",
                "formatter": "json",
                "filename": os.path.join(log_dir, "error.log"),
                "maxBytes": 10485760,  # 10MB
                "backupCount": 5,
                "encoding": "utf8",
            },
        },
        "loggers": {
            "tape": {
                "level": "DEBUG",
                "handlers": ["console", "file", "error_file"],
                "propagate": False,
            },
            "httpx": {
                "level": "WARNING",
                "handlers": ["file"],
                "propagate": False,
            },
        },
        "root": {
            "level": "WARNING",
            "handlers": ["console"],
        },
    }

    logging.config.dictConfig(LOGGING_CONFIG)


def get_logger(name: str) -> logging.Logger:
    """Get logger instance under the tape namespace"""
    if name.startswith("tape_app."):
        name = name[len("tape_app."):]
    return logging.getLogger(f"tape.{name}")


def log_stage_start(logger: logging.Logger, stage: str, details: Optional[Dict[str, Any]] = None):
    """Log the start of a pipeline stage"""
    extra = {"stage": stage, "event_type": "stage_start"}
    if details:
        extra.update(details)
    logger.info(f"Stage started: {stage}", extra=extra)


def log_stage_end(logger: logging.Logger, stage: str, duration_ms: float,
                  details: Optional[Dict[str, Any]] = None):
    """Log the end of a pipeline stage"""
    extra = {"stage": stage, "duration_ms": round(duration_ms, 2), "event_type": "stage_end"}
    if details:
        extra.update(details)
    logger.info(f"Stage finished: {stage} ({extra['duration_ms']}ms)", extra=extra)


def log_pipeline_event(logger: logging.Logger, event: str, details: Optional[Dict[str, Any]] = None):
    """Log pipeline events"""
    extra = {
        "event_type": "pipeline_event",
        "pipeline_event": event,
    }
    if details:
        extra.update(details)

    logger.info(f"Pipeline Event: {event}", extra=extra)


def log_error(logger: logging.Logger, error: Exception, context: Optional[Dict[str, Any]] = None,
              operation: Optional[str] = None):
    """Log errors with context"""
    extra = {
        "error_type": type(error).__name__,
        "event_type": "error",
        "error_message": str(error),
    }

    if operation:
        extra["operation"] = operation

    if context:
        extra.update(context)

    # Stack trace summary for quick debugging
    stack = traceback.extract_tb(error.__traceback__)
    if stack:
        extra["error_location"] = f"{stack[-1].filename}:{stack[-1].lineno} in {stack[-1].name}"

    logger.error(f"Error in {operation or 'unknown operation'}: {str(error)}", extra=extra,
                 exc_info=(type(error), error, error.__traceback__) if error.__traceback__ else None)
