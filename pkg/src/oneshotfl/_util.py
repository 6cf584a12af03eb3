"""Seed derivation and record encoding shared across modules."""

from __future__ import annotations

import hashlib
import json
from typing import Any

import numpy as np

SCHEMA_VERSION = 1


def derive_seed(master: int, *labels: Any) -> int:
    """Map ``(master, *labels)`` to a 64-bit seed.

    Streams derived this way do not depend on evaluation order, so parallel
    workers reproduce the serial results exactly.
    """
    key = repr((int(master),) + tuple(str(label) for label in labels))
    return int.from_bytes(hashlib.sha256(key.encode("utf-8")).digest()[:8], "little")


def derive_rng(master: int, *labels: Any) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, *labels))


def encode_record(record: dict) -> bytes:
    # compact + sorted keys: the byte length is the communication unit
    return json.dumps(record, sort_keys=True, separators=(",", ":"), allow_nan=False).encode("utf-8")


def decode_record(blob: bytes | str) -> dict:
    if isinstance(blob, bytes):
        blob = blob.decode("utf-8")
    record = json.loads(blob)
    version = record.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {version!r}")
    return record


def device_sort_key(device_id: str) -> tuple:
    """Numeric ids sort numerically, everything else lexicographically after them."""
    try:
        return (0, int(device_id), device_id)
    except (TypeError, ValueError):
        return (1, 0, str(device_id))
