import hashlib
import logging
import sys
from typing import Any, Optional, Union

LOG_FORMAT = '%(levelname)s: %(name)s: %(message)s'


def setup_logging(level: Union[str, int] = 'WARNING') -> None:
    """Configure root logging once; logs go to stderr so stdout stays clean."""
    root = logging.getLogger()
    for handler in list(root.handlers):
        if getattr(handler, '_tamecheck', False):
            root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    handler._tamecheck = True
    root.addHandler(handler)
    root.setLevel(level)


def sha256_bytes(payload: bytes) -> str:
    return hashlib.sha256(payload).hexdigest()


def format_triple(triple: Optional[Any]) -> str:
    """Format a (q, D, d) bound for tables; '-' when absent"""
    if triple is None:
        return '-'
    return f"({triple.q},{triple.D},{triple.d})"


def format_big_int(value: int, max_digits: int = 24) -> str:
    """Shorten huge integers for human output, keeping the digit count"""
    text = str(value)
    if len(text) <= max_digits:
        return text
    return f"{text[:6]}...{text[-6:]} ({len(text)} digits)"
