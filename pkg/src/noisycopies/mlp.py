"""Small fully-connected ReLU regressor trained by plain SGD.

Parameters are a list of ``(W, b)`` pairs with ``W`` of shape
``(fan_out, fan_in)``.  Hidden layers use ReLU (or identity, for test
fixtures), the output layer is linear with width 1.  The loss is the batch
mean of squared errors with no 1/2 factor.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .data import AugmentationSpec, NoiseBank
from .errors import ConfigError, DivergenceError, ShapeError
from .numkit import GaussSource, gauss_mat
from .trainers import DIVERGENCE_LIMIT

INIT_DESCRIPTION = "hidden W ~ N(0, 2/fan_in), output W ~ N(0, 1/fan_in), biases 0"


@dataclass(frozen=True)
class MlpSpec:
    widths: tuple = (8, 32, 32, 1)
    seed: int = 0
    activation: str = "relu"

    def __post_init__(self):
        widths = tuple(int(w) for w in self.widths)
        if len(widths) < 3:
            raise ConfigError("need an input layer, at least one hidden layer and an output", "widths")
        if widths[-1] != 1:
            raise ConfigError("output width must be 1", "widths")
        if min(widths) < 1:
            raise ConfigError("layer widths must be positive", "widths")
        if self.activation not in ("relu", "identity"):
            raise ConfigError(f"unknown activation {self.activation!r}", "activation")
        object.__setattr__(self, "widths", widths)


def init_params(spec):
    src = GaussSource(spec.seed).child("mlp-init")
    params = []
    last = len(spec.widths) - 2
    for i, (fan_in, fan_out) in enumerate(zip(spec.widths[:-1], spec.widths[1:])):
        gain = 1.0 if i == last else 2.0
        W = gauss_mat(src.child(i), fan_out, fan_in, math.sqrt(gain / fan_in))
        params.append((W, np.zeros(fan_out)))
    return params


def _act(z, activation):
    return np.maximum(z, 0.0) if activation == "relu" else z


def _forward_cache(params, X, activation):
    acts = [X]
    pre = []
    h = X
    for i, (W, b) in enumerate(params):
        z = h @ W.T + b
        pre.append(z)
        h = z if i == len(params) - 1 else _act(z, activation)
        acts.append(h)
    return pre, acts


def predict(params, X, activation="relu"):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != params[0][0].shape[1]:
        raise ShapeError(f"input width {X.shape[1]} != {params[0][0].shape[1]}")
    return _forward_cache(params, X, activation)[1][-1][:, 0]


def forward(params, x, activation="relu"):
    """Network output for a single input vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError("forward takes one input vector; use predict for batches")
    return float(predict(params, x[None, :], activation)[0])


def loss(params, X, y, activation="relu"):
    r = np.asarray(y, dtype=np.float64) - predict(params, X, activation)
    return float(r @ r) / r.size


def grad(params, X, y, activation="relu"):
    """Gradient of the batch MSE with respect to every ``(W, b)``."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] != y.shape[0]:
        raise ShapeError(f"batch has {X.shape[0]} inputs and {y.shape[0]} targets")
    if X.shape[1] != params[0][0].shape[1]:
        raise ShapeError(f"input width {X.shape[1]} != {params[0][0].shape[1]}")
    pre, acts = _forward_cache(params, X, activation)
    g = (-2.0 / X.shape[0]) * (y - acts[-1][:, 0])[:, None]
    out = [None] * len(params)
    for i in range(len(params) - 1, -1, -1):
        W, _ = params[i]
        out[i] = (g.T @ acts[i], g.sum(axis=0))
        if i:
            g = g @ W
            if activation == "relu":
                g = g * (pre[i - 1] > 0)
    return out


def augmented_data(d, aug):
    """Stack the original data and ``K`` off-line noisy copies, original first."""
    bank = NoiseBank(d.n, d.m, replace(aug, mode="offline"))
    K = bank.K
    Xa = np.concatenate([d.X] + [d.X + bank.get(0, k) for k in range(1, K + 1)])
    return Xa, np.tile(d.y, K + 1)


@dataclass
class MlpRun:
    curve: np.ndarray
    params: list
    n_train: int


def sgd_train(d, spec, aug, batch_size, eta, epochs, shuffle=False, shuffle_seed=0):
    """Plain SGD over the augmented data in a fixed order.

    Each epoch visits the original rows, then copy 1, ..., copy K, in
    contiguous batches.  ``curve[t]`` is the MSE on the rows being trained on
    (augmented rows for K > 0) after epoch ``t``; ``curve[0]`` is at
    initialization.
    """
    if aug is None:
        aug = AugmentationSpec(0, 0.0, "none")
    Xa, ya = augmented_data(d, aug)
    N = Xa.shape[0]
    if batch_size < 1 or (batch_size != N and N % batch_size):
        raise ConfigError(f"batch size {batch_size} must divide the {N} training rows", "batch_size")
    if spec.widths[0] != d.m:
        raise ConfigError(f"input width {spec.widths[0]} != dataset m={d.m}", "widths")
    params = init_params(spec)
    act = spec.activation
    curve = np.empty(epochs + 1)
    curve[0] = loss(params, Xa, ya, act)
    rng = np.random.default_rng(shuffle_seed) if shuffle else None
    for t in range(1, epochs + 1):
        order = rng.permutation(N) if shuffle else None
        for start in range(0, N, batch_size):
            idx = slice(start, start + batch_size) if order is None else order[start:start + batch_size]
            grads = grad(params, Xa[idx], ya[idx], act)
            params = [(W - eta * gW, b - eta * gb) for (W, b), (gW, gb) in zip(params, grads)]
        big = max(float(np.max(np.abs(W))) for W, _ in params)
        if not big <= DIVERGENCE_LIMIT:
            raise DivergenceError(t, big)
        curve[t] = loss(params, Xa, ya, act)
    return MlpRun(curve, params, N)
