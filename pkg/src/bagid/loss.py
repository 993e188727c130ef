"""Recording-level training objective: the expected average label
distribution of a bag and the KL divergence between it and the model's
bag-averaged prediction.

Distributions are plain float64 arrays of length C+1 indexed by the
vocabulary (last entry = unknown class).
"""

from __future__ import annotations

import numpy as np

from .corpus import LabelVocabulary

#: Floor applied to predicted probabilities inside the log only, keeping
#: the loss finite without perturbing the stored distributions.
EPS = 1e-12


def expected_distribution(labels, bag_size: int, vocab: LabelVocabulary) -> np.ndarray:
    """Target distribution for a recording with label set ``labels`` and
    ``bag_size`` embeddings.

    Each annotated label receives 1/bag_size, the unknown class
    max(0, 1 - |labels|/bag_size), everything else 0. If more labels are
    annotated than there are bag members the raw values sum to more than
    one and the vector is renormalized.
    """
    if bag_size < 1:
        raise ValueError("bag_size must be >= 1")
    labels = tuple(labels)
    p = np.zeros(vocab.num_outputs)
    for label in labels:
        p[vocab.index_of(label)] = 1.0 / bag_size
    p[vocab.unk_index] = max(0.0, 1.0 - len(labels) / bag_size)
    if len(labels) > bag_size:
        p /= p.sum()
    return p


def average_prediction(bag_outputs) -> np.ndarray:
    """Elementwise mean of the per-member probability vectors."""
    bag_outputs = np.asarray(bag_outputs, dtype=np.float64)
    if bag_outputs.ndim != 2 or bag_outputs.shape[0] < 1:
        raise ValueError("bag_outputs must be a non-empty (M, K) matrix")
    return bag_outputs.mean(axis=0)


def kl_divergence(p, q) -> float:
    """D(p || q) = sum_y p(y) log(p(y)/q(y)).

    Terms with p(y) = 0 contribute exactly zero; q is floored at EPS
    inside the log only.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError(f"distribution lengths differ: {p.shape} vs {q.shape}")
    support = p > 0.0
    ps = p[support]
    return float(np.sum(ps * (np.log(ps) - np.log(np.maximum(q[support], EPS)))))


def recording_loss_grad(expected, bag_outputs) -> tuple[float, np.ndarray]:
    """Loss and gradient for one recording.

    Returns (loss, d_bag) with loss = D(expected || mean(bag_outputs))
    and d_bag[m, y] = -(1/M) * expected[y] / max(mean[y], EPS), i.e. the
    gradient with respect to each bag member's output vector.
    """
    expected = np.asarray(expected, dtype=np.float64)
    bag_outputs = np.asarray(bag_outputs, dtype=np.float64)
    mean = average_prediction(bag_outputs)
    loss = kl_divergence(expected, mean)
    m = bag_outputs.shape[0]
    d_mean = np.where(expected > 0.0, -expected / np.maximum(mean, EPS), 0.0)
    d_bag = np.tile(d_mean / m, (m, 1))
    return loss, d_bag
