"""relkit: scene-graph relationship toolkit.

Triplet extraction from text, co-occurrence based predicate statistics,
a trainable attention-based relationship head with a composite
classification + embedding loss, zero-shot relationship classification
over label embeddings, and a recall@K evaluation harness.
"""

__version__ = "0.1.0"
