"""Deterministic RNG streams derived from one master seed."""

from __future__ import annotations

import zlib

import numpy as np


def _tag_value(tag):
    if isinstance(tag, (int, np.integer)):
        return int(tag) & 0xFFFFFFFF
    if isinstance(tag, str):
        return zlib.crc32(tag.encode("utf-8"))
    raise TypeError(f"rng tag must be int or str, got {type(tag).__name__}")


def rng_for(seed: int, *tags) -> np.random.Generator:
    """A generator keyed by (seed, *tags); same key, same stream, always."""
    key = [int(seed) & 0xFFFFFFFFFFFFFFFF]
    key.extend(_tag_value(t) for t in tags)
    return np.random.default_rng(key)
