"""Pure NumPy implementation of the bag forward/backward kernels.

Reference semantics for the compiled backend: given one bag of
embeddings, run the two-hidden-layer leaky-ReLU network with optional
pre-scaled dropout masks, and backpropagate a gradient taken with
respect to the softmax outputs.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "pure"


def bag_forward(x, w1, b1, w2, b2, w3, b3, slope, mask1=None, mask2=None):
    """Forward one bag through the network.

    x: (M, D); masks, when given, are (M, H) arrays holding 0 or
    1/keep_prob and are applied after the hidden activation.

    Returns (probs, z1, h1, z2, h2) where z* are pre-activations and h*
    the masked hidden activations feeding the next layer.
    """
    z1 = x @ w1 + b1
    h1 = np.where(z1 > 0.0, z1, slope * z1)
    if mask1 is not None:
        h1 = h1 * mask1
    z2 = h1 @ w2 + b2
    h2 = np.where(z2 > 0.0, z2, slope * z2)
    if mask2 is not None:
        h2 = h2 * mask2
    z3 = h2 @ w3 + b3
    z3 = z3 - z3.max(axis=1, keepdims=True)
    probs = np.exp(z3)
    probs /= probs.sum(axis=1, keepdims=True)
    return probs, z1, h1, z2, h2


def bag_backward(x, w1, w2, w3, slope, mask1, mask2, probs, z1, h1, z2, h2, d_probs):
    """Backpropagate d_probs (gradient w.r.t. the softmax outputs, (M, K))
    through softmax, dropout masks and leaky ReLU exactly as applied in
    the forward pass. Returns (gw1, gb1, gw2, gb2, gw3, gb3).
    """
    # softmax Jacobian: dz = p * (d - <d, p>)
    inner = np.sum(d_probs * probs, axis=1, keepdims=True)
    dz3 = probs * (d_probs - inner)

    gw3 = h2.T @ dz3
    gb3 = dz3.sum(axis=0)

    dh2 = dz3 @ w3.T
    if mask2 is not None:
        dh2 = dh2 * mask2
    dz2 = dh2 * np.where(z2 > 0.0, 1.0, slope)

    gw2 = h1.T @ dz2
    gb2 = dz2.sum(axis=0)

    dh1 = dz2 @ w2.T
    if mask1 is not None:
        dh1 = dh1 * mask1
    dz1 = dh1 * np.where(z1 > 0.0, 1.0, slope)

    gw1 = x.T @ dz1
    gb1 = dz1.sum(axis=0)
    return gw1, gb1, gw2, gb2, gw3, gb3
