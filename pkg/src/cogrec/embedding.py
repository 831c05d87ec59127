"""Deterministic text embeddings.

The offline embedder hashes tokens into a fixed-width signed feature vector
(sha256-based, so stable across processes and platforms) and L2-normalizes.
It stands in for a pretrained sentence encoder wherever the engine needs a
text -> vector function without network access.
"""

from __future__ import annotations

import hashlib
import re
from collections import Counter
from typing import Callable, Protocol

import numpy as np

TextEmbedder = Callable[[str], np.ndarray]

_TOKEN_RE = re.compile(r"[a-z0-9']+")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


class EncodingProvider(Protocol):
    """Optional remote encoder; must return a vector of the configured dim."""

    identity: str

    def encode(self, text: str) -> np.ndarray: ...


class HashedTextEmbedder:
    """Feature-hashing embedder: token -> (bucket, sign) via sha256."""

    identity = "hashed-v1"

    def __init__(self, dim: int = 384):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = dim

    def _slot(self, token: str) -> tuple[int, float]:
        digest = hashlib.sha256(token.encode("utf-8")).digest()
        bucket = int.from_bytes(digest[:8], "little") % self.dim
        sign = 1.0 if digest[8] & 1 else -1.0
        return bucket, sign

    def __call__(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float32)
        counts = Counter(tokenize(text))
        for token, count in counts.items():
            bucket, sign = self._slot(token)
            # sublinear tf keeps long texts from drowning rare tokens
            vec[bucket] += sign * (1.0 + np.log(count))
        norm = float(np.linalg.norm(vec))
        if norm > 0.0:
            vec /= norm
        return vec


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))
