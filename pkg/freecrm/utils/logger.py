"""Singleton logger shared by every freecrm module."""

import logging
import os
import re
import sys
import traceback
from functools import wraps
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

LOGGER_NAME = "freecrm"


class LoggerConfig:
    """Configuration for the freecrm logger.

    Args:
        log_level: Minimum log level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_files: List of file paths to write logs to
        truncate_log_files: Clear existing files on startup vs append
        output_to_stderr: Show logs on the console (stderr; stdout carries CLI data)
        verbose_logs: Include function names and line numbers
        enable_incident_counting: Add numbers to warnings/errors
        enable_traceback: Include a compact traceback in errors
    """

    def __init__(
        self,
        log_level: int = logging.WARNING,
        log_files: Optional[List[str]] = None,
        truncate_log_files: bool = True,
        output_to_stderr: bool = True,
        verbose_logs: bool = False,
        enable_incident_counting: bool = True,
        enable_traceback: bool = True,
    ):
        self.log_level = log_level
        self.log_files = log_files or []
        self.truncate_log_files = truncate_log_files
        self.output_to_stderr = output_to_stderr
        self.verbose_logs = verbose_logs
        self.enable_incident_counting = enable_incident_counting
        self.enable_traceback = enable_traceback

    @classmethod
    def from_env(cls) -> "LoggerConfig":
        """Default configuration, with ``FREECRM_LOG_LEVEL`` honoured when set."""
        config = cls()
        level = os.environ.get("FREECRM_LOG_LEVEL")
        if level:
            resolved = logging.getLevelName(level.strip().upper())
            if isinstance(resolved, int):
                config.log_level = resolved
        return config


class Logger:
    """Singleton logger for the freecrm package.

    The first call to ``Logger()`` or ``get_logger()`` fixes the configuration;
    later calls return the same instance. Warnings and errors are numbered so
    long numerical runs can be cross-referenced with their log.

    Examples:
        >>> logger = Logger.get_logger()
        >>> logger.debug("solver converged in %d iterations", 12)
    """

    _instance: Optional["Logger"] = None

    def __new__(cls, config: Optional[LoggerConfig] = None) -> "Logger":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
            cls._instance.__initialized = False
        return cls._instance

    def __init__(self, config: Optional[LoggerConfig] = None) -> None:
        if hasattr(self, "_Logger__initialized") and self.__initialized:
            return

        if config is None:
            config = LoggerConfig.from_env()

        self.config = config
        self.logger = logging.getLogger(LOGGER_NAME)
        self.logger.setLevel(config.log_level)

        self.warning_count = 0
        self.error_count = 0

        self.logger.handlers.clear()
        self.logger.propagate = False

        self._setup_handlers()

        if config.enable_incident_counting:
            self._apply_warning_override()
            self._apply_error_override()

        self.__initialized = True

    @classmethod
    def get_logger(cls, config: Optional[LoggerConfig] = None) -> logging.Logger:
        """Get the shared ``logging.Logger``."""
        if cls._instance is None:
            cls._instance = cls(config)
        return cls._instance.logger

    @classmethod
    def get_instance(cls) -> Optional["Logger"]:
        """Get the Logger instance (not the logging.Logger)."""
        return cls._instance

    def set_log_level(self, level: Union[int, str]) -> None:
        """Change the log level of the logger and all its handlers."""
        if isinstance(level, str):
            level = getattr(logging, level.upper(), logging.WARNING)

        self.config.log_level = level
        self.logger.setLevel(level)
        for handler in self.logger.handlers:
            handler.setLevel(level)

        self.logger.debug("Log level changed to %s", logging.getLevelName(level))

    def add_file_handler(self, file_path: str, truncate: bool = False) -> None:
        """Add a file handler to the logger."""
        try:
            if truncate and os.path.exists(file_path):
                os.remove(file_path)
            Path(file_path).parent.mkdir(parents=True, exist_ok=True)

            handler = logging.FileHandler(file_path)
            handler.setLevel(self.config.log_level)
            handler.setFormatter(self._get_formatter())
            self.logger.addHandler(handler)
            self.logger.debug("Added file handler for: %s", file_path)
        except Exception as e:
            self.logger.error(f"Failed to add file handler: {e}")

    def reset_incident_counters(self) -> None:
        """Reset warning and error counters."""
        self.warning_count = 0
        self.error_count = 0

    def get_stats(self) -> Dict[str, Any]:
        """Get logger statistics."""
        return {
            "warning_count": self.warning_count,
            "error_count": self.error_count,
            "log_level": logging.getLevelName(self.logger.level),
            "handler_count": len(self.logger.handlers),
            "handlers": [type(h).__name__ for h in self.logger.handlers],
        }

    def _setup_handlers(self) -> None:
        formatter = self._get_formatter()

        if self.config.output_to_stderr:
            console_handler = logging.StreamHandler(sys.stderr)
            console_handler.setLevel(self.config.log_level)
            console_handler.setFormatter(formatter)
            self.logger.addHandler(console_handler)

        for log_file in self.config.log_files:
            self.add_file_handler(log_file, self.config.truncate_log_files)

    def _get_formatter(self) -> logging.Formatter:
        format_string = "%(asctime)s | %(levelname)8s |"
        if self.config.verbose_logs:
            format_string += " %(module)s.%(funcName)s:%(lineno)d |"
        format_string += " %(message)s"
        return logging.Formatter(format_string)

    def _apply_warning_override(self) -> None:
        original_warning = self.logger.warning

        @wraps(original_warning)
        def warning_with_count(msg, *args, **kwargs):
            self.warning_count += 1
            original_warning(f"(incident #{self.warning_count}) {msg}", *args, **kwargs)

        self.logger.warning = warning_with_count  # type: ignore[method-assign]

    def _apply_error_override(self) -> None:
        original_error = self.logger.error

        @wraps(original_error)
        def error_with_traceback(msg, *args, include_traceback=True, **kwargs):
            if include_traceback and self.config.enable_traceback:
                traceback_msg = format_exception_traceback()
                if traceback_msg:
                    msg = f"{msg}\n{traceback_msg}"

            self.error_count += 1
            msg = f"(incident #{self.error_count}) {msg}"
            msg = re.sub(r"\n+", "\n", str(msg)).strip()
            original_error(msg, *args, **kwargs)

        self.logger.error = error_with_traceback  # type: ignore[method-assign]


def format_exception_traceback() -> Optional[str]:
    """Format the active exception's traceback compactly, or None if there is none."""
    exc_type, exc_value, exc_traceback = sys.exc_info()
    if exc_type is None:
        return None

    try:
        tb_lines = traceback.extract_tb(exc_traceback)
        if not tb_lines:
            return f"{exc_type.__name__}: {exc_value}"

        lines = [f"╭─ Traceback ({exc_type.__name__})"]
        for i, tb_line in enumerate(tb_lines, 1):
            prefix = "╰─" if i == len(tb_lines) else "├─"
            lines.append(f"{prefix} [{i}] {Path(tb_line.filename).name}:{tb_line.lineno} in {tb_line.name}()")
        lines.append(f"╰─ {exc_type.__name__}: {exc_value}")
        return "\n".join(lines)
    except Exception as fallback_error:
        return f"Traceback format error: {fallback_error}\n{exc_type.__name__}: {exc_value}"
