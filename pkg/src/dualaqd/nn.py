"""Dense feed-forward networks with reverse-mode gradients, dropout and Adam.

Everything is float64. Hidden layers use a nonlinearity followed by inverted
dropout; the output layer is linear.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import ConfigurationError, TrainingError

CHECKPOINT_VERSION = 1

_ACTIVATIONS = {
    "relu": (lambda z: np.maximum(z, 0.0), lambda z, a: (z > 0.0).astype(np.float64)),
    "tanh": (np.tanh, lambda z, a: 1.0 - a * a),
    "identity": (lambda z: z, lambda z, a: np.ones_like(z)),
}


@dataclass
class Mlp:
    """Weights of one feed-forward network.

    ``weights[k]`` has shape ``(layer_dims[k], layer_dims[k + 1])``.
    """

    layer_dims: list
    weights: list
    biases: list
    activation: str = "relu"
    dropout_rate: float = 0.1

    def __post_init__(self):
        self.layer_dims = [int(d) for d in self.layer_dims]
        if len(self.layer_dims) < 2:
            raise ConfigurationError("an Mlp needs at least an input and an output layer")
        if self.activation not in _ACTIVATIONS:
            raise ConfigurationError(
                f"unknown activation {self.activation!r}; expected one of {sorted(_ACTIVATIONS)}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigurationError(f"dropout_rate must lie in [0, 1), got {self.dropout_rate}")
        if self.output_dim not in (1, 2, 3):
            raise ConfigurationError(f"output_dim must be 1, 2 or 3, got {self.output_dim}")
        n = len(self.layer_dims) - 1
        if len(self.weights) != n or len(self.biases) != n:
            raise ConfigurationError("number of weight/bias arrays does not match layer_dims")
        for k in range(n):
            shape = (self.layer_dims[k], self.layer_dims[k + 1])
            if self.weights[k].shape != shape:
                raise ConfigurationError(
                    f"layer {k} weight shape {self.weights[k].shape} != expected {shape}")
            if self.biases[k].shape != (shape[1],):
                raise ConfigurationError(
                    f"layer {k} bias shape {self.biases[k].shape} != expected {(shape[1],)}")

    @classmethod
    def init(cls, layer_dims, rng, activation="relu", dropout_rate=0.1):
        """He-uniform weights scaled by fan-in, zero biases."""
        weights, biases = [], []
        for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
            limit = np.sqrt(6.0 / fan_in)
            weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return cls(list(layer_dims), weights, biases, activation, dropout_rate)

    @property
    def output_dim(self):
        return self.layer_dims[-1]

    @property
    def n_layers(self):
        return len(self.weights)

    def params(self):
        """Flat parameter list ``[W0, b0, W1, b1, ...]`` (views, not copies)."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def copy(self):
        return Mlp(list(self.layer_dims), [w.copy() for w in self.weights],
                   [b.copy() for b in self.biases], self.activation, self.dropout_rate)

    def __call__(self, x):
        return forward(self, x)[0]


@dataclass
class ForwardTrace:
    inputs: list = field(default_factory=list)  # input to each layer
    pre_activations: list = field(default_factory=list)
    activations: list = field(default_factory=list)  # post-nonlinearity, pre-dropout
    masks: list = field(default_factory=list)
    layer_dims: tuple = ()


def forward(model, x, dropout_active=False, rng=None):
    """Run ``x`` through ``model``; returns ``(outputs, trace)``.

    ``x`` may be a single feature vector or an ``(N, z)`` batch. Outputs are
    always 2-D ``(N, output_dim)``.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != model.layer_dims[0]:
        raise ConfigurationError(
            f"input width {x.shape[-1] if x.ndim else 0} does not match layer_dims[0]={model.layer_dims[0]}")
    use_dropout = dropout_active and model.dropout_rate > 0.0
    if use_dropout and rng is None:
        raise ConfigurationError("dropout_active requires an rng")
    act, _ = _ACTIVATIONS[model.activation]
    keep = 1.0 - model.dropout_rate

    trace = ForwardTrace(layer_dims=tuple(model.layer_dims))
    a = x
    last = model.n_layers - 1
    for k, (w, b) in enumerate(zip(model.weights, model.biases)):
        trace.inputs.append(a)
        z = a @ w + b
        if k == last:
            return z, trace
        h = act(z)
        if use_dropout:
            mask = (rng.random(h.shape) < keep) / keep
        else:
            mask = np.ones_like(h)
        trace.pre_activations.append(z)
        trace.activations.append(h)
        trace.masks.append(mask)
        a = h * mask if use_dropout else h
    raise AssertionError("unreachable")


def backward(model, trace, output_gradient):
    """Gradients of a scalar loss w.r.t. every parameter.

    ``output_gradient`` is dLoss/dOutputs with the shape of the forward output.
    Returns a list aligned with :meth:`Mlp.params`.
    """
    if tuple(model.layer_dims) != trace.layer_dims or len(trace.inputs) != model.n_layers:
        raise ConfigurationError("trace was not produced by this model")
    g = np.asarray(output_gradient, dtype=np.float64)
    if g.ndim == 1:
        g = g[:, None]
    if g.shape != (trace.inputs[0].shape[0], model.output_dim):
        raise ConfigurationError(f"output gradient shape {g.shape} does not match outputs")
    _, dact = _ACTIVATIONS[model.activation]

    grads = [None] * (2 * model.n_layers)
    for k in range(model.n_layers - 1, -1, -1):
        grads[2 * k] = trace.inputs[k].T @ g
        grads[2 * k + 1] = g.sum(axis=0)
        if k == 0:
            break
        g = g @ model.weights[k].T
        g = g * trace.masks[k - 1] * dact(trace.pre_activations[k - 1], trace.activations[k - 1])
    return grads


class Adam:
    """Adam with bias correction. Updates parameter arrays in place."""

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads, context=""):
        if len(params) != len(self.m):
            raise ConfigurationError("parameter list does not match optimizer state")
        for g in grads:
            if not np.all(np.isfinite(g)):
                raise TrainingError(f"non-finite gradient{' at ' + context if context else ''}")
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            if p.shape != g.shape:
                raise ConfigurationError(f"gradient shape {g.shape} != parameter shape {p.shape}")
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
        return params


def adam_step(state, params, grads):
    """Functional alias for ``state.step(params, grads)``."""
    return state.step(params, grads)


def transfer_weights(f_model, g_model):
    """Copy every non-output layer of ``f_model`` into ``g_model`` (in place).

    The output layer of ``g_model`` keeps its own (fresh) initialization.
    """
    if f_model.layer_dims[:-1] != g_model.layer_dims[:-1]:
        raise ConfigurationError(
            f"cannot transfer weights: hidden dims {f_model.layer_dims[:-1]} "
            f"!= {g_model.layer_dims[:-1]}")
    for k in range(f_model.n_layers - 1):
        g_model.weights[k] = f_model.weights[k].copy()
        g_model.biases[k] = f_model.biases[k].copy()
    return g_model


def save_model(path, model, metadata=None):
    """Write ``model`` as an ``.npz`` checkpoint; weights round-trip bit-exactly."""
    header = {
        "version": CHECKPOINT_VERSION,
        "layer_dims": model.layer_dims,
        "activation": model.activation,
        "dropout_rate": model.dropout_rate,
        "metadata": metadata or {},
    }
    arrays = {"header": np.array(json.dumps(header))}
    for k, (w, b) in enumerate(zip(model.weights, model.biases)):
        arrays[f"W{k}"] = w
        arrays[f"b{k}"] = b
    path = Path(path)
    with path.open("wb") as fh:
        np.savez(fh, **arrays)
    return path


def load_model(path):
    """Inverse of :func:`save_model`; returns ``(model, metadata)``."""
    with np.load(path, allow_pickle=False) as data:
        header = json.loads(str(data["header"]))
        if header.get("version") != CHECKPOINT_VERSION:
            raise ConfigurationError(f"unsupported checkpoint version {header.get('version')}")
        n = len(header["layer_dims"]) - 1
        weights = [data[f"W{k}"].copy() for k in range(n)]
        biases = [data[f"b{k}"].copy() for k in range(n)]
    model = Mlp(header["layer_dims"], weights, biases, header["activation"], header["dropout_rate"])
    return model, header["metadata"]
