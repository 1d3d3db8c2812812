"""JSON encoding of rationals, elements and nested containers."""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any

from .rational import fmt


def encode(obj: Any) -> Any:
    if isinstance(obj, Fraction):
        return fmt(obj)
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, float, str)):
        return obj
    to_json = getattr(obj, "to_json", None)
    if callable(to_json):
        return to_json()
    if isinstance(obj, dict):
        return {str(k): encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [encode(v) for v in obj]
    return str(obj)


def dumps(obj: Any) -> str:
    """Deterministic JSON text (sorted keys, fixed separators)."""
    return json.dumps(encode(obj), sort_keys=True, indent=2, ensure_ascii=False)


def load_arg(text: str) -> Any:
    """Parse a JSON argument, following ``@path`` indirection."""
    if text.startswith("@"):
        text = Path(text[1:]).read_text(encoding="utf-8")
    return json.loads(text)
