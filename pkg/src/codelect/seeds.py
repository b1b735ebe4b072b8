"""Deterministic seed derivation and the fixed 64-bit string hash.

Every random draw in the pipeline flows from one global seed through
`derive`; no ambient entropy, no platform-dependent hashing (the builtin
`hash` is salted per process and never used here).
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1

# FNV-1a 64-bit offset basis / prime.
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def _splitmix64(x: int) -> int:
    # Finalizer from the splitmix64 generator; full avalanche.
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def hash64(data: bytes, seed: int = 0) -> int:
    """Seeded FNV-1a over `data`, finished with a splitmix64 avalanche."""
    h = (_FNV_OFFSET ^ (seed & MASK64)) & MASK64
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & MASK64
    return _splitmix64(h)


def hash64_str(text: str, seed: int = 0) -> int:
    return hash64(text.encode("utf-8"), seed)


def derive(global_seed: int, stage: str, unit_id: str = "") -> int:
    """Per-stage, per-unit seed: hash(global_seed, stage, unit_id).

    Recorded in outputs so any unit's perturbation can be reproduced in
    isolation regardless of worker scheduling.
    """
    return hash64_str(f"{global_seed}\x1f{stage}\x1f{unit_id}")
