"""Deterministic seed derivation used across modules.

Sub-seeds are derived from a master seed by XOR-ing it with a stable 64-bit
hash of a label (the first eight bytes of the label's SHA-256, big endian).
The rule is documented so corpora can be regenerated elsewhere bit-exactly.
"""

from __future__ import annotations

import hashlib

_MASK = 0xFFFFFFFFFFFFFFFF


def stable_hash64(label: str) -> int:
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def derive_seed(master: int, label: str) -> int:
    return (master ^ stable_hash64(label)) & _MASK
