"""Word embedding table: plain-text loader, phrase pooling, cosine math.

File format matches the de facto public word-vector distribution: one
token per line followed by its vector entries, whitespace-separated.
Phrases are pooled by the unweighted mean of their in-vocabulary tokens.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from .errors import FormatError, NumericError, OutOfVocabularyError


@dataclass
class EmbeddingTable:
    """token -> fixed-dimension dense vector."""

    dimension: int
    vectors: Dict[str, np.ndarray]

    def __contains__(self, token: str) -> bool:
        return token in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)


def load_embeddings(path) -> EmbeddingTable:
    dimension = None
    vectors: Dict[str, np.ndarray] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            token, entries = parts[0], parts[1:]
            try:
                vec = np.array([float(v) for v in entries], dtype=np.float64)
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: non-numeric entry") from exc
            if not np.all(np.isfinite(vec)):
                raise FormatError(f"{path}:{lineno}: non-finite entry")
            if dimension is None:
                if vec.size == 0:
                    raise FormatError(f"{path}:{lineno}: empty vector")
                dimension = vec.size
            elif vec.size != dimension:
                raise FormatError(
                    f"{path}:{lineno}: dimension {vec.size} != {dimension}")
            vectors[token] = vec
    if dimension is None:
        raise FormatError(f"{path}: empty embedding file")
    return EmbeddingTable(dimension=int(dimension), vectors=vectors)


def save_embeddings(table: EmbeddingTable, path) -> None:
    with open(path, "w") as fh:
        for token in sorted(table.vectors):
            entries = " ".join(repr(float(v)) for v in table.vectors[token])
            fh.write(f"{token} {entries}\n")


def embed_phrase(table: EmbeddingTable, phrase: str,
                 strict: bool = True) -> Tuple[np.ndarray, bool]:
    """Mean vector of the phrase's in-vocabulary tokens.

    Returns (vector, known). With every token out of vocabulary, strict
    mode raises; lenient mode returns (zeros, False).
    """
    tokens = phrase.split()
    # summed in sorted-token order so any reordering of the same token
    # multiset yields a bit-identical vector
    hits = [table.vectors[t] for t in sorted(tokens) if t in table.vectors]
    if not hits:
        if strict:
            raise OutOfVocabularyError(f"no embeddable token in phrase: {phrase!r}")
        return np.zeros(table.dimension, dtype=np.float64), False
    total = np.zeros(table.dimension, dtype=np.float64)
    for vec in hits:
        total += vec
    return total / len(hits), True


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise NumericError(f"cosine shape mismatch: {u.shape} vs {v.shape}")
    nu, nv = float(np.linalg.norm(u)), float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise NumericError("cosine undefined for the zero vector")
    value = float(np.dot(u, v) / (nu * nv))
    # guard against rounding drift just past +/-1
    return max(-1.0, min(1.0, value))


def cosine_loss(u: np.ndarray, v: np.ndarray) -> float:
    """1 - cos(u, v); in [0, 2]."""
    return 1.0 - cosine(u, v)
