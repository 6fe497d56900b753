"""Deterministic seed derivation.

Every random stream in the package is keyed by a tuple such as
``(base_seed, "train")`` or ``(base_seed, delta, p, n, replicate)``. Keys are
hashed with BLAKE2b so that a stream depends only on its key and never on the
order in which workers happen to request streams.
"""

from __future__ import annotations

import hashlib

import numpy as np

SEED_MASK = (1 << 64) - 1


def _encode(part: object) -> str:
    if isinstance(part, bool):
        return f"b:{int(part)}"
    if isinstance(part, (int, np.integer)):
        return f"i:{int(part)}"
    if isinstance(part, (float, np.floating)):
        return f"f:{float(part)!r}"
    if isinstance(part, str):
        return f"s:{part}"
    raise TypeError(f"cannot derive a seed from {type(part).__name__}")


def derive_seed(*parts: object) -> int:
    """Hash ``parts`` into an unsigned 64-bit seed."""
    if not parts:
        raise ValueError("derive_seed needs at least one key part")
    payload = "\x1f".join(_encode(p) for p in parts).encode("utf-8")
    digest = hashlib.blake2b(payload, digest_size=8).digest()
    return int.from_bytes(digest, "little") & SEED_MASK


def rng_for(*parts: object) -> np.random.Generator:
    """PCG64 generator seeded from ``derive_seed(*parts)``."""
    return np.random.default_rng(derive_seed(*parts))
