"""Seeded, order-independent random streams.

Every stream is keyed by ``(master_seed, *keys)`` through
:class:`numpy.random.SeedSequence` and drives a counter-based Philox
generator, so a replication's draws never depend on which worker ran it or
in what order. String keys are hashed to 64 bits.
"""
from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _key(k) -> int:
    if isinstance(k, str):
        return int.from_bytes(hashlib.sha256(k.encode()).digest()[:8], "little")
    return int(k) & _MASK64


def make_rng(seed: int, *keys) -> np.random.Generator:
    entropy = [_key(seed)] + [_key(k) for k in keys]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def derive_seed(seed: int, *keys) -> int:
    """A 64-bit seed for the stream ``(seed, *keys)``, for reporting."""
    entropy = [_key(seed)] + [_key(k) for k in keys]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])
