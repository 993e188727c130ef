"""Embedding-space helpers: length normalization and the
utterance-to-speaker aggregation rule (normalize, average, normalize).
"""

from __future__ import annotations

import numpy as np

_ZERO_NORM_TOL = 1e-12


def length_normalize(v) -> np.ndarray:
    """Scale a vector to unit Euclidean norm."""
    v = np.asarray(v, dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if norm <= _ZERO_NORM_TOL:
        raise ValueError("cannot length-normalize a zero vector")
    return v / norm


def aggregate_speaker_embedding(utterances) -> np.ndarray:
    """Collapse per-utterance embeddings into one speaker embedding.

    Each utterance vector is length-normalized, the normalized vectors
    are averaged, and the average is length-normalized again. Raises on
    an empty list, a zero utterance vector, or a zero mean (antipodal
    cancellation), since the final normalization would divide by ~0.
    """
    utterances = list(utterances)
    if not utterances:
        raise ValueError("need at least one utterance embedding")
    normalized = np.stack([length_normalize(u) for u in utterances])
    mean = normalized.mean(axis=0)
    if float(np.linalg.norm(mean)) <= _ZERO_NORM_TOL:
        raise ValueError("utterance embeddings cancel out; mean is a zero vector")
    return length_normalize(mean)
