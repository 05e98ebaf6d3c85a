"""Deterministic JSON output with 17-significant-digit floats.

The standard encoder's ``repr`` floats are already round-trippable, but
their width varies; a fixed ``%.17g`` keeps every rerun byte-identical and
still parses back to the exact same double. Only types our documents
actually contain are supported — anything else is a bug worth raising on.
"""

from __future__ import annotations

import json
import math
from enum import Enum
from typing import Mapping, Sequence

import numpy as np


def format_float(value: float) -> str:
    if math.isnan(value) or math.isinf(value):
        raise ValueError("non-finite float in JSON document")
    return "%.17g" % value


def _encode(obj, pieces: list, indent: int, level: int) -> None:
    if obj is None:
        pieces.append("null")
    elif isinstance(obj, (bool, np.bool_)):
        pieces.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        pieces.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        pieces.append(format_float(float(obj)))
    elif isinstance(obj, Enum):
        _encode(obj.value, pieces, indent, level)
    elif isinstance(obj, str):
        pieces.append(json.dumps(obj))
    elif isinstance(obj, Mapping):
        if not obj:
            pieces.append("{}")
            return
        open_sep, close_sep, item_sep = _separators(indent, level)
        pieces.append("{" + open_sep)
        for i, (key, value) in enumerate(obj.items()):
            if i:
                pieces.append("," + item_sep)
            if not isinstance(key, str):
                raise TypeError(f"JSON object keys must be strings, got {type(key).__name__}")
            pieces.append(json.dumps(key) + ": ")
            _encode(value, pieces, indent, level + 1)
        pieces.append(close_sep + "}")
    elif isinstance(obj, Sequence):
        if not obj:
            pieces.append("[]")
            return
        open_sep, close_sep, item_sep = _separators(indent, level)
        pieces.append("[" + open_sep)
        for i, value in enumerate(obj):
            if i:
                pieces.append("," + item_sep)
            _encode(value, pieces, indent, level + 1)
        pieces.append(close_sep + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__} to JSON")


def _separators(indent: int, level: int) -> tuple[str, str, str]:
    if indent <= 0:
        return "", "", " "
    pad = " " * (indent * (level + 1))
    return "\n" + pad, "\n" + " " * (indent * level), "\n" + pad


def dumps(obj, *, indent: int = 0) -> str:
    """Serialize to a JSON string; ``indent > 0`` pretty-prints."""
    pieces: list = []
    _encode(obj, pieces, indent, 0)
    return "".join(pieces)


def dump_line(obj) -> str:
    """One compact JSON document plus newline (for JSON Lines files)."""
    return dumps(obj) + "\n"
