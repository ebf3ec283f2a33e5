"""Deterministic text embeddings.

Text is lowercased, split on non-alphanumeric runs, and each token is
hashed (FNV-1a 64-bit) onto one of ``dims`` buckets. Token counts are
accumulated and the vector is L2-normalized, so identical text always
embeds to the same unit vector on any platform. Empty text embeds to
the all-zero vector.
"""

from __future__ import annotations

import re

import numpy as np

DEFAULT_DIMS = 256

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric characters, dropping empties."""
    return _TOKEN_RE.findall(text.lower())


def fnv1a_64(token: str) -> int:
    h = _FNV_OFFSET
    for byte in token.encode("utf-8"):
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def embed_text(text: str, dims: int = DEFAULT_DIMS) -> np.ndarray:
    """Embed text as a unit-norm count-hash vector (zero vector for empty text)."""
    vec = np.zeros(dims, dtype=np.float64)
    for token in tokenize(text):
        vec[fnv1a_64(token) % dims] += 1.0
    norm = np.linalg.norm(vec)
    if norm > 0.0:
        vec /= norm
    return vec


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity; zero vectors have similarity 0 with everything."""
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def is_unit_or_zero(vec: np.ndarray, tol: float = 1e-9) -> bool:
    norm = float(np.linalg.norm(vec))
    return norm == 0.0 or abs(norm - 1.0) < tol
