"""Small shared helpers: seeding, hashing, finiteness checks."""

from __future__ import annotations

import hashlib

import numpy as np

_SEED_MASK = (1 << 64) - 1


def make_rng(seed: int) -> np.random.Generator:
    """Deterministic generator; identical seeds give identical streams."""
    return np.random.default_rng(seed & _SEED_MASK)


def subseed(seed: int, label: str) -> int:
    """Derive an independent child seed from a root seed and a label.

    The label is hashed so the mapping does not depend on call order, and
    the same (seed, label) pair always yields the same child.
    """
    tag = int.from_bytes(hashlib.sha256(label.encode("utf-8")).digest()[:8], "little")
    ss = np.random.SeedSequence([seed & _SEED_MASK, tag])
    return int(ss.generate_state(1, np.uint64)[0])


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def ensure_finite(name: str, arr, exc: type = ValueError) -> None:
    a = np.asarray(arr)
    if not np.all(np.isfinite(a)):
        raise exc(f"non-finite values in {name}")
