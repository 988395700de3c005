"""Logging setup: stdlib loggers rendered through rich."""
import logging
from typing import Optional

from rich.console import Console
from rich.logging import RichHandler

console = Console(stderr=True)

_ROOT = "dcufront"
_configured = False


def configure_logging(level: str = "INFO", show_path: bool = False) -> logging.Logger:
    """
    Install the rich handler on the package logger (idempotent).

    Args:
        level: Logging level name
        show_path: Include source path in each record

    Returns:
        The package root logger
    """
    global _configured
    root = logging.getLogger(_ROOT)
    root.setLevel(level.upper())
    if not _configured:
        handler = RichHandler(console=console, show_path=show_path, rich_tracebacks=False)
        handler.setFormatter(logging.Formatter("%(name)s: %(message)s"))
        root.addHandler(handler)
        root.propagate = False
        _configured = True
    return root


def get_logger(name: Optional[str] = None) -> logging.Logger:
    """Return a logger under the dcufront namespace."""
    if not name:
        return logging.getLogger(_ROOT)
    if name == _ROOT or name.startswith(_ROOT + "."):
        return logging.getLogger(name)
    return logging.getLogger(f"{_ROOT}.{name}")
