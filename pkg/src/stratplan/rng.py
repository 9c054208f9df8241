"""Keyed, platform-stable random streams.

A stream is a ``random.Random`` seeded from the SHA-256 digest of its key, so
the value drawn for (seed, round, action) never depends on how many other
draws happened before it.  Only ``Random.random`` is used downstream; the
derived helpers below are written out here so that their output does not
depend on the Python version's implementation of ``shuffle``/``choices``.
"""
from __future__ import annotations

import hashlib
import random
from typing import Sequence, TypeVar

T = TypeVar("T")


def keyed_random(*key) -> random.Random:
    text = "\x1f".join(str(k) for k in key).encode("utf-8")
    digest = hashlib.sha256(text).digest()
    return random.Random(int.from_bytes(digest, "big"))


def shuffled(rng: random.Random, items: Sequence[T]) -> list[T]:
    out = list(items)
    for i in range(len(out) - 1, 0, -1):
        j = int(rng.random() * (i + 1))
        out[i], out[j] = out[j], out[i]
    return out


def categorical(rng: random.Random, weights: Sequence[float]) -> int:
    u = rng.random() * sum(weights)
    acc = 0.0
    for i, w in enumerate(weights):
        acc += w
        if u < acc:
            return i
    return len(weights) - 1


def uniform_index(rng: random.Random, n: int) -> int:
    return min(int(rng.random() * n), n - 1)
