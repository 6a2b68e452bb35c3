"""Canonical JSON: sorted keys, 12-significant-digit floats, trailing newline.

Identical inputs serialize to identical bytes, which is what the report and
figure writers rely on.
"""
from __future__ import annotations

import json

import numpy as np

__all__ = ["canonical_value", "dumps_canonical"]


def canonical_value(obj):
    """Recursively normalize to plain JSON types with rounded floats."""
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(f"{float(obj):.12g}")
    if isinstance(obj, dict):
        return {str(k): canonical_value(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [canonical_value(v) for v in obj]
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot canonicalize {type(obj).__name__}")


def dumps_canonical(obj) -> str:
    return json.dumps(canonical_value(obj), sort_keys=True, indent=2) + "\n"
