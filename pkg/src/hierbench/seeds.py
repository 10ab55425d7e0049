"""Deterministic sub-seed derivation.

Every stochastic component (chains, retry attempts, sensitivity variants,
mask splits) derives its own 64-bit seed from a base seed plus a string
tag, via BLAKE2b. Unlike Python's salted ``hash()``, the derivation is
stable across processes and platforms, which is what makes reruns
byte-identical.
"""

from __future__ import annotations

import hashlib

_MASK64 = (1 << 64) - 1


def derive_seed(base: int, *parts: object) -> int:
    """Derive a 64-bit sub-seed from ``base`` and a tag tuple.

    Identical inputs always yield the identical sub-seed; any change to
    ``base`` or any part yields an unrelated one.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(base) & _MASK64).encode("ascii"))
    for part in parts:
        h.update(b"\x1f")
        h.update(repr(part).encode("utf-8"))
    return int.from_bytes(h.digest(), "little")


def as_uint64(seed: int) -> int:
    """Map an arbitrary Python int (possibly negative) onto [0, 2**64)."""
    return int(seed) & _MASK64
