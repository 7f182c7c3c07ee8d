"""Fully connected autoencoder trained with hand-written backpropagation.

The network is a symmetric stack ``m -> h1 -> ... -> L -> ... -> h1 -> m``.
Hidden layers use the chosen activation; the code layer and the
reconstruction layer are linear.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dr_spectral import Embedding, as_matrix
from .errors import TrainingDiverged

CHECKPOINT_FORMAT = "lowrank-ser-mlp"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class MlpSpec:
    layer_widths: tuple
    activation: str = "relu"

    def __post_init__(self):
        w = tuple(int(x) for x in self.layer_widths)
        object.__setattr__(self, "layer_widths", w)
        if len(w) < 3 or len(w) % 2 == 0:
            raise ValueError("layer_widths must have odd length >= 3 (encoder, code, decoder)")
        if any(x < 1 for x in w):
            raise ValueError("layer widths must be positive")
        if w[0] != w[-1]:
            raise ValueError(f"input width {w[0]} differs from output width {w[-1]}")
        if self.activation not in ("relu", "linear"):
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def m(self):
        return self.layer_widths[0]

    @property
    def L(self):
        return self.layer_widths[len(self.layer_widths) // 2]

    @property
    def n_layers(self):
        return len(self.layer_widths) - 1

    @property
    def code_layer(self):
        """Index of the weight layer whose output is the code."""
        return self.n_layers // 2 - 1

    def is_hidden(self, layer):
        return layer != self.code_layer and layer != self.n_layers - 1


def default_spec(m, L, hidden_per_side=3, activation="relu"):
    """Encoder widths interpolated geometrically between ``m`` and ``L``."""
    steps = hidden_per_side + 1
    enc = [max(L, int(round(m * (L / m) ** (i / steps)))) for i in range(1, steps)]
    widths = [m] + enc + [L] + enc[::-1] + [m]
    return MlpSpec(tuple(widths), activation)


@dataclass
class MlpParams:
    weights: list
    biases: list

    def copy(self):
        return MlpParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def flat(self):
        return np.concatenate([np.r_[w.ravel(), b] for w, b in zip(self.weights, self.biases)])


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 32
    epochs: int = 200
    seed: int = 42
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size < 1 or self.epochs < 0:
            raise ValueError("learning_rate and batch_size must be positive, epochs >= 0")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


def init_mlp(spec, seed):
    """Glorot-uniform weights, zero biases."""
    rng = np.random.default_rng(seed)
    W, b = [], []
    for fan_in, fan_out in zip(spec.layer_widths[:-1], spec.layer_widths[1:]):
        lim = np.sqrt(6.0 / (fan_in + fan_out))
        W.append(rng.uniform(-lim, lim, size=(fan_out, fan_in)))
        b.append(np.zeros(fan_out))
    return MlpParams(W, b)


def _check_params(params, spec):
    for l, (fi, fo) in enumerate(zip(spec.layer_widths[:-1], spec.layer_widths[1:])):
        if params.weights[l].shape != (fo, fi) or params.biases[l].shape != (fo,):
            raise ValueError(f"layer {l} parameters do not match widths {fi}->{fo}")


def forward(params, spec, X, upto=None):
    """Run the network; returns the list of pre-activations and activations."""
    relu = spec.activation == "relu"
    acts = [X]
    pres = []
    last = spec.n_layers if upto is None else upto
    h = X
    for l in range(last):
        z = h @ params.weights[l].T + params.biases[l]
        pres.append(z)
        h = np.maximum(z, 0.0) if (relu and spec.is_hidden(l)) else z
        acts.append(h)
    return pres, acts


def loss_and_grads(params, spec, X):
    """Mean squared reconstruction error and its gradients."""
    pres, acts = forward(params, spec, X)
    diff = acts[-1] - X
    loss = float(np.mean(diff ** 2))
    delta = 2.0 * diff / diff.size
    gW = [None] * spec.n_layers
    gb = [None] * spec.n_layers
    relu = spec.activation == "relu"
    for l in range(spec.n_layers - 1, -1, -1):
        if relu and spec.is_hidden(l):
            delta = delta * (pres[l] > 0)
        gW[l] = delta.T @ acts[l]
        gb[l] = delta.sum(axis=0)
        if l:
            delta = delta @ params.weights[l]
    return loss, MlpParams(gW, gb)


def reconstruction_mse(params, spec, X):
    return float(np.mean((forward(params, spec, as_matrix(X))[1][-1] - as_matrix(X)) ** 2))


def train_autoencoder(X, spec, cfg=None, params=None):
    """Mini-batch training on the reconstruction MSE.

    Returns ``(params, losses)`` with one full-data loss per epoch, measured
    after that epoch's updates. Batches are reshuffled each epoch from
    ``cfg.seed``; initial weights come from the same seed unless ``params``
    is given.
    """
    cfg = cfg or TrainConfig()
    X = as_matrix(X)
    if X.shape[1] != spec.m:
        raise ValueError(f"data width {X.shape[1]} does not match network input {spec.m}")
    params = init_mlp(spec, cfg.seed) if params is None else params.copy()
    _check_params(params, spec)
    rng = np.random.default_rng([cfg.seed, 1])
    n = len(X)
    slots = params.weights + params.biases
    m1 = [np.zeros_like(p) for p in slots]
    m2 = [np.zeros_like(p) for p in slots]
    t = 0
    losses = []
    # overflow on a diverging run is reported as TrainingDiverged below
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(cfg.epochs):
            order = rng.permutation(n)
            for start in range(0, n, cfg.batch_size):
                batch = X[order[start:start + cfg.batch_size]]
                _, g = loss_and_grads(params, spec, batch)
                grads = g.weights + g.biases
                t += 1
                for i, (p, gr) in enumerate(zip(slots, grads)):
                    if cfg.optimizer == "sgd":
                        p -= cfg.learning_rate * gr
                    else:
                        m1[i] = cfg.beta1 * m1[i] + (1 - cfg.beta1) * gr
                        m2[i] = cfg.beta2 * m2[i] + (1 - cfg.beta2) * gr * gr
                        mh = m1[i] / (1 - cfg.beta1 ** t)
                        vh = m2[i] / (1 - cfg.beta2 ** t)
                        p -= cfg.learning_rate * mh / (np.sqrt(vh) + cfg.eps)
            loss = reconstruction_mse(params, spec, X)
            if not np.isfinite(loss):
                raise TrainingDiverged(epoch)
            losses.append(loss)
    return params, np.array(losses)


def encode(params, spec, X):
    """Forward pass through the encoder half; returns an ``n x L`` embedding."""
    X = as_matrix(X)
    if X.ndim != 2 or X.shape[1] != spec.m:
        raise ValueError(f"data width {X.shape[-1]} does not match network input {spec.m}")
    _check_params(params, spec)
    _, acts = forward(params, spec, X, upto=spec.code_layer + 1)
    return Embedding(Y=acts[-1], method="autoencoder", L=spec.L)


def autoencoder_fit(X, L, cfg=None, activation="relu"):
    """Train a default-width autoencoder on ``X`` and return its code for ``X``."""
    X = as_matrix(X)
    spec = default_spec(X.shape[1], L, activation=activation)
    params, losses = train_autoencoder(X, spec, cfg)
    emb = encode(params, spec, X)
    emb.info.update(params=params, spec=spec, losses=losses)
    return emb


def save_checkpoint(params, spec, path):
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "layer_widths": list(spec.layer_widths),
        "activation": spec.activation,
        "layers": [{"shape": list(W.shape), "W": W.ravel().tolist(), "b": b.tolist()}
                   for W, b in zip(params.weights, params.biases)],
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def load_checkpoint(path):
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != CHECKPOINT_FORMAT or doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: not a version-{CHECKPOINT_VERSION} {CHECKPOINT_FORMAT} checkpoint")
    spec = MlpSpec(tuple(doc["layer_widths"]), doc["activation"])
    W = [np.array(layer["W"], dtype=float).reshape(layer["shape"]) for layer in doc["layers"]]
    b = [np.array(layer["b"], dtype=float) for layer in doc["layers"]]
    params = MlpParams(W, b)
    _check_params(params, spec)
    return params, spec
