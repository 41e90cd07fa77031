"""Shallow multi-label classifiers with hand-derived gradients.

Two architectures are supported: linear (q -> c) and one rectified hidden
layer (q -> h -> c).  Weights are stored as ``(fan_in, fan_out)`` matrices so
a layer is ``A @ W + b``.

Checkpoint layout (JSON, UTF-8)::

    {"format": "crisp-checkpoint", "version": 1,
     "layer_dims": [q, h?, c],
     "layers": [{"weight": [...row-major fan_in*fan_out...], "bias": [...]}, ...]}

Floats are written with ``repr`` precision, so a save/load round trip is
bit-exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

CHECKPOINT_FORMAT = "crisp-checkpoint"
CHECKPOINT_VERSION = 1


class CheckpointError(ValueError):
    pass


@dataclass
class Classifier:
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        if len(self.weights) not in (1, 2) or len(self.weights) != len(self.biases):
            raise ValueError("expected one or two layers")
        for k, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.ndim != 2 or b.shape != (W.shape[1],):
                raise ValueError(f"layer {k}: weight {W.shape} / bias {b.shape} mismatch")
            if k and W.shape[0] != self.weights[k - 1].shape[1]:
                raise ValueError(f"layer {k}: input width does not match previous layer")
            if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
                raise ValueError("non-finite parameter")

    @property
    def layer_dims(self) -> list[int]:
        return [self.weights[0].shape[0]] + [W.shape[1] for W in self.weights]

    @property
    def n_inputs(self) -> int:
        return self.weights[0].shape[0]

    @property
    def n_outputs(self) -> int:
        return self.weights[-1].shape[1]

    @property
    def hidden(self) -> bool:
        return len(self.weights) == 2

    def params(self) -> list[np.ndarray]:
        """Flat list ``[W0, b0, W1, b1, ...]`` (views, not copies)."""
        out = []
        for W, b in zip(self.weights, self.biases):
            out += [W, b]
        return out

    def copy(self) -> "Classifier":
        return Classifier([W.copy() for W in self.weights], [b.copy() for b in self.biases])


@dataclass
class GradientSet:
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def params(self) -> list[np.ndarray]:
        out = []
        for W, b in zip(self.weights, self.biases):
            out += [W, b]
        return out


def init_classifier(layer_dims, seed: int = 0) -> Classifier:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialisation, seeded."""
    dims = [int(d) for d in layer_dims]
    if len(dims) not in (2, 3) or min(dims) < 1:
        raise ValueError(f"layer_dims must be [q, c] or [q, h, c], got {dims}")
    rng = np.random.default_rng(int(seed))
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return Classifier(weights, biases)


def sigmoid(x):
    """Overflow-free logistic function."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _check_input(model: Classifier, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_inputs:
        raise ValueError(f"expected input of shape (n, {model.n_inputs}), got {X.shape}")
    return X


def _forward(model: Classifier, X: np.ndarray):
    if model.hidden:
        pre = X @ model.weights[0] + model.biases[0]
        H = np.maximum(pre, 0.0)
        return H @ model.weights[1] + model.biases[1], pre, H
    return X @ model.weights[0] + model.biases[0], None, None


def forward_logits(model: Classifier, X) -> np.ndarray:
    X = _check_input(model, X)
    return _forward(model, X)[0]


def forward_probs(model: Classifier, X) -> np.ndarray:
    return sigmoid(forward_logits(model, X))


def backward(model: Classifier, X, upstream) -> GradientSet:
    """Gradient of ``sum(upstream * logits)`` w.r.t. every parameter.

    ``upstream`` holds dL/dg per row, so any batch averaging must already be
    folded into it.
    """
    X = _check_input(model, X)
    G = np.asarray(upstream, dtype=np.float64)
    if G.shape != (X.shape[0], model.n_outputs):
        raise ValueError(f"upstream shape {G.shape} != {(X.shape[0], model.n_outputs)}")
    if not model.hidden:
        return GradientSet([X.T @ G], [G.sum(axis=0)])
    _, pre, H = _forward(model, X)
    dW1 = H.T @ G
    db1 = G.sum(axis=0)
    dH = G @ model.weights[1].T
    dpre = dH * (pre > 0)
    return GradientSet([X.T @ dpre, dW1], [dpre.sum(axis=0), db1])


# --------------------------------------------------------------------------
# checkpoints
# --------------------------------------------------------------------------

def save_checkpoint(model: Classifier, path) -> None:
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "layer_dims": model.layer_dims,
        "layers": [
            {"weight": W.ravel(order="C").tolist(), "bias": b.tolist()}
            for W, b in zip(model.weights, model.biases)
        ],
    }
    Path(path).write_text(json.dumps(doc))


def load_checkpoint(path) -> Classifier:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"truncated or corrupt checkpoint: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError("not a crisp checkpoint")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {doc.get('version')!r}")
    try:
        dims = [int(d) for d in doc["layer_dims"]]
        layers = doc["layers"]
        if len(layers) != len(dims) - 1:
            raise CheckpointError("layer count does not match layer_dims")
        weights, biases = [], []
        for (fan_in, fan_out), layer in zip(zip(dims[:-1], dims[1:]), layers):
            W = np.asarray(layer["weight"], dtype=np.float64)
            b = np.asarray(layer["bias"], dtype=np.float64)
            if W.size != fan_in * fan_out or b.size != fan_out:
                raise CheckpointError("truncated parameter array")
            if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
                raise CheckpointError("non-finite parameter in checkpoint")
            weights.append(W.reshape(fan_in, fan_out))
            biases.append(b)
    except (KeyError, TypeError) as exc:
        raise CheckpointError(f"malformed checkpoint: {exc}") from None
    return Classifier(weights, biases)
