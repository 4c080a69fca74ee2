"""Deterministic, platform-independent hashing.

Feature hashing and seed derivation both need hashes that are identical
across processes and platforms, so Python's salted builtin ``hash`` is
off limits.  Everything here is built on 64-bit FNV-1a with its standard
published constants.
"""

from functools import lru_cache

__all__ = ["FNV_OFFSET_BASIS", "FNV_PRIME", "fnv1a_64", "gram_hash", "derive_seed"]

# Standard 64-bit FNV-1a constants.
FNV_OFFSET_BASIS = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3

_MASK64 = 0xFFFFFFFFFFFFFFFF


def fnv1a_64(data: bytes) -> int:
    """64-bit FNV-1a hash of ``data``."""
    h = FNV_OFFSET_BASIS
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & _MASK64
    return h


@lru_cache(maxsize=1 << 20)
def gram_hash(gram: str) -> int:
    """Hash of a character n-gram (UTF-8 bytes), cached for speed."""
    return fnv1a_64(gram.encode("utf-8"))


def derive_seed(seed: int, component: str) -> int:
    """Derive a per-component RNG seed from a single run seed.

    Mixing the component name into the seed gives every component its
    own deterministic stream without manual seed bookkeeping.  Returns
    a non-negative value accepted by ``numpy.random.default_rng``.
    """
    if seed < 0:
        raise ValueError("seed must be non-negative")
    return fnv1a_64(f"{component}\x00{seed}".encode("utf-8")) >> 1
