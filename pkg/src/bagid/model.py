"""Feedforward softmax network over the label set plus the unknown class:
two fully-connected hidden layers with leaky ReLU and inverted dropout.

All arithmetic is 64-bit. The hot bag-level forward/backward paths are
delegated to :mod:`bagid._kernels`.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from . import _kernels
from .corpus import LabelVocabulary

_MODEL_MAGIC = "bagid-model"
_MODEL_VERSION = 1
_PARAM_NAMES = ("w1", "b1", "w2", "b2", "w3", "b3")


@dataclass(frozen=True)
class ModelConfig:
    input_dim: int
    hidden_dim: int
    num_outputs: int
    dropout_rate: float = 0.0
    leaky_slope: float = 0.01

    def __post_init__(self):
        if self.input_dim < 1 or self.hidden_dim < 1:
            raise ValueError("input_dim and hidden_dim must be >= 1")
        if self.num_outputs < 2:
            raise ValueError("num_outputs must cover at least one target label plus <unk>")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must lie in [0, 1)")
        if self.leaky_slope <= 0.0:
            raise ValueError("leaky_slope must be positive")


@dataclass(eq=False)
class Model:
    """Network parameters. Weight shapes: (fan_in, fan_out); biases (fan_out,)."""

    config: ModelConfig
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray

    def parameters(self) -> tuple[np.ndarray, ...]:
        return (self.w1, self.b1, self.w2, self.b2, self.w3, self.b3)

    def copy(self) -> "Model":
        return Model(self.config, *(p.copy() for p in self.parameters()))


@dataclass(eq=False)
class BagCache:
    """Activations recorded by a train-mode forward pass, consumed by backward()."""

    x: np.ndarray
    probs: np.ndarray
    z1: np.ndarray
    h1: np.ndarray
    z2: np.ndarray
    h2: np.ndarray
    mask1: np.ndarray | None
    mask2: np.ndarray | None


def _expected_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    d, h, k = config.input_dim, config.hidden_dim, config.num_outputs
    return {
        "w1": (d, h), "b1": (h,),
        "w2": (h, h), "b2": (h,),
        "w3": (h, k), "b3": (k,),
    }


def init_model(config: ModelConfig, seed: int) -> Model:
    """Deterministically initialize parameters from a seed.

    Weights are uniform on +-sqrt(6 / (fan_in + fan_out)); biases zero.
    The same (config, seed) pair always yields bit-identical arrays.
    """
    rng = np.random.default_rng(seed)
    params = {}
    for name, shape in _expected_shapes(config).items():
        if name.startswith("b"):
            params[name] = np.zeros(shape)
        else:
            fan_in, fan_out = shape
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            params[name] = rng.uniform(-bound, bound, size=shape)
    return Model(config, **params)


def draw_dropout_masks(rng: np.random.Generator, bag_size: int, config: ModelConfig):
    """Inverted dropout masks for both hidden layers: entries are 0 with
    probability dropout_rate, else 1/keep_prob."""
    if config.dropout_rate == 0.0:
        return None, None
    keep = 1.0 - config.dropout_rate
    shape = (bag_size, config.hidden_dim)
    mask1 = (rng.random(shape) < keep) / keep
    mask2 = (rng.random(shape) < keep) / keep
    return mask1, mask2


def forward_bag(model: Model, x, mode: str = "infer", rng: np.random.Generator | None = None):
    """Forward a whole bag (M, D).

    infer mode returns the (M, K) probability matrix; train mode returns
    (probs, BagCache) and applies fresh dropout masks drawn from ``rng``.
    """
    if mode not in ("train", "infer"):
        raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")
    x = np.ascontiguousarray(np.asarray(x, dtype=np.float64))
    if x.ndim != 2 or x.shape[1] != model.config.input_dim:
        raise ValueError(
            f"bag shape {x.shape} does not match input_dim {model.config.input_dim}"
        )
    if mode == "train":
        if model.config.dropout_rate > 0.0 and rng is None:
            raise ValueError("train-mode forward with dropout requires an rng")
        mask1, mask2 = (
            draw_dropout_masks(rng, x.shape[0], model.config)
            if model.config.dropout_rate > 0.0
            else (None, None)
        )
    else:
        mask1, mask2 = None, None

    probs, z1, h1, z2, h2 = _kernels.bag_forward(
        x, model.w1, model.b1, model.w2, model.b2, model.w3, model.b3,
        model.config.leaky_slope, mask1, mask2,
    )
    if mode == "infer":
        return probs
    return probs, BagCache(x, probs, z1, h1, z2, h2, mask1, mask2)


def forward(model: Model, x, mode: str = "infer", rng: np.random.Generator | None = None):
    """Forward a single embedding; returns the K-vector of class
    probabilities (plus a BagCache in train mode)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"expected a single embedding vector, got shape {x.shape}")
    out = forward_bag(model, x[None, :], mode=mode, rng=rng)
    if mode == "infer":
        return out[0]
    probs, cache = out
    return probs[0], cache


@dataclass(eq=False)
class Gradients:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray

    def arrays(self) -> tuple[np.ndarray, ...]:
        return (self.w1, self.b1, self.w2, self.b2, self.w3, self.b3)


def backward(model: Model, cache: BagCache, d_probs) -> Gradients:
    """Parameter gradients for one bag.

    ``d_probs`` is the loss gradient with respect to the bag-averaged
    output distribution (shape (K,)), or per bag member (shape (M, K)).
    """
    if cache is None:
        raise ValueError("backward requires the cache from a train-mode forward pass")
    m, k = cache.probs.shape
    d_probs = np.asarray(d_probs, dtype=np.float64)
    if d_probs.shape == (k,):
        d_probs = np.tile(d_probs / m, (m, 1))
    elif d_probs.shape != (m, k):
        raise ValueError(f"d_probs shape {d_probs.shape} matches neither ({k},) nor ({m}, {k})")
    d_probs = np.ascontiguousarray(d_probs)
    grads = _kernels.bag_backward(
        cache.x, model.w1, model.w2, model.w3, model.config.leaky_slope,
        cache.mask1, cache.mask2, cache.probs,
        cache.z1, cache.h1, cache.z2, cache.h2, d_probs,
    )
    return Gradients(*grads)


def save_model(model: Model, path, vocab: LabelVocabulary | None = None) -> None:
    """Write a versioned binary container: one JSON header line with the
    config (and vocabulary labels, if given), then the parameter arrays
    as consecutive .npy blobs. Bit-exact and byte-stable."""
    header = {
        "format": _MODEL_MAGIC,
        "version": _MODEL_VERSION,
        "config": asdict(model.config),
        "params": list(_PARAM_NAMES),
    }
    if vocab is not None:
        header["labels"] = list(vocab.labels)
    with open(path, "wb") as f:
        f.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        for name in _PARAM_NAMES:
            np.save(f, getattr(model, name))


def load_model(path) -> tuple[Model, LabelVocabulary | None]:
    """Inverse of save_model; restores parameters bit-exactly."""
    with open(path, "rb") as f:
        header = json.loads(f.readline().decode("utf-8"))
        if header.get("format") != _MODEL_MAGIC:
            raise ValueError(f"{path}: not a model file")
        if header.get("version") != _MODEL_VERSION:
            raise ValueError(f"{path}: unsupported model version {header.get('version')}")
        config = ModelConfig(**header["config"])
        expected = _expected_shapes(config)
        params = {}
        for name in header["params"]:
            arr = np.load(f)
            if arr.shape != expected[name]:
                raise ValueError(
                    f"{path}: parameter {name} has shape {arr.shape}, "
                    f"expected {expected[name]}"
                )
            params[name] = arr
    model = Model(config, **params)
    labels = header.get("labels")
    vocab = LabelVocabulary(labels) if labels is not None else None
    return model, vocab
