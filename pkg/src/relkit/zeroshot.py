"""Zero-shot relationship classification over label embeddings.

A predicted relationship representation is scored against every label's
phrase embedding by cosine similarity, then softmaxed. Labels never seen
during training participate exactly like seen ones, which is the point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .embed import EmbeddingTable, embed_phrase
from .errors import NumericError


@dataclass(frozen=True)
class LabelEmbeddingMatrix:
    labels: Tuple[str, ...]
    matrix: np.ndarray  # |labels| x e, row i = embed_phrase(labels[i])

    def __post_init__(self):
        if self.matrix.shape[0] != len(self.labels):
            raise NumericError("label/matrix row count mismatch")
        norms = np.linalg.norm(self.matrix, axis=1)
        if np.any(norms == 0.0):
            raise NumericError("label embedding rows must be nonzero")


def build_label_matrix(labels: Sequence[str],
                       table: EmbeddingTable) -> LabelEmbeddingMatrix:
    rows = [embed_phrase(table, label, strict=True)[0] for label in labels]
    return LabelEmbeddingMatrix(tuple(labels), np.stack(rows))


def predict_unseen(v_hat: np.ndarray, labels: LabelEmbeddingMatrix,
                   temperature: float = 1.0) -> np.ndarray:
    """Softmax over per-label cosine similarities; sums to 1."""
    v_hat = np.asarray(v_hat, dtype=np.float64)
    norm = float(np.linalg.norm(v_hat))
    if norm == 0.0:
        raise NumericError("cosine undefined for a zero representation")
    if temperature <= 0.0:
        raise NumericError("temperature must be positive")
    row_norms = np.linalg.norm(labels.matrix, axis=1)
    sims = labels.matrix @ v_hat / (row_norms * norm)
    z = sims / temperature
    z -= z.max()
    exp = np.exp(z)
    return exp / exp.sum()


def topk(probabilities: np.ndarray, labels: Sequence[str], k: int) -> List[str]:
    """k highest-probability labels, descending; ties by ascending label."""
    if k < 1:
        raise NumericError("k must be >= 1")
    order = sorted(range(len(labels)), key=lambda i: (-probabilities[i], labels[i]))
    return [labels[i] for i in order[:k]]
