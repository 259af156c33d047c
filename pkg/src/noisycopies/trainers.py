"""Update rules and training loops.

Conventions: losses carry no 1/2 factor, so every gradient keeps its factor 2.
Noise for the ``K`` copies of one epoch is passed as a ``(K, n, m)`` array
(``U[k-1]`` is copy ``k``; the zero copy ``U_0`` is implicit).  The
full-batch rules also accept extra leading batch axes on both the noise and
``w``, which the Monte-Carlo oracles use to evaluate many draws at once.
"""

from dataclasses import dataclass, replace

import numpy as np

from .data import AugmentationSpec, BatchPartition, NoiseBank, partition as make_partition
from .errors import ConfigError, DivergenceError, ShapeError

REGIMES = ("naive", "ridge", "da-online", "da-offline", "ridge-mb-equiv")
CRITERIA = ("SSE", "MSE", "MB")
DIVERGENCE_LIMIT = 1e12


def _check(d, w, U=None):
    w = np.asarray(w, dtype=np.float64)
    if w.shape[-1] != d.m:
        raise ShapeError(f"w has length {w.shape[-1]}, dataset has m={d.m}")
    if U is not None:
        U = np.asarray(U, dtype=np.float64)
        if U.ndim < 3 or U.shape[-2:] != (d.n, d.m):
            raise ShapeError(f"noise must be (..., K, {d.n}, {d.m}), got {U.shape}")
    return w, U


def delta_s(d, w):
    """Gradient of ``||y - Xw||^2``: ``-2 X^T (y - Xw)``."""
    w, _ = _check(d, w)
    resid = d.y - w @ d.X.T
    return -2.0 * (resid @ d.X)


def delta_c(d, w, lam):
    """Gradient of ``||y - Xw||^2 + lam ||w||^2``."""
    w, _ = _check(d, w)
    return delta_s(d, w) + 2.0 * lam * w


def r_sse(d, U, w):
    """Noise part of the augmented SSE gradient, summed over copies.

    For copies ``X + U_k``::

        r = sum_k { -U_k^T y + (X^T U_k + U_k^T X + U_k^T U_k) w }

    so that the augmented gradient is ``(K+1) * delta_s + 2 r`` exactly and
    ``E[r] = K tau^2 w``.
    """
    w, U = _check(d, w, U)
    if U.shape[-3] == 0:
        return np.zeros(U.shape[:-3] + (d.m,))
    Uw = np.einsum("...kij,...j->...ki", U, w)
    Xw = w @ d.X.T
    uty = np.einsum("...kij,i->...j", U, d.y)
    xtuw = np.einsum("ij,...ki->...j", d.X, Uw)
    utxw = np.einsum("...kij,...i->...j", U, Xw)
    utuw = np.einsum("...kij,...ki->...j", U, Uw)
    return -uty + xtuw + utxw + utuw


def _da_sse_inner(d, U, w):
    K = U.shape[-3]
    return delta_s(d, w) + (2.0 / (K + 1)) * r_sse(d, U, w)


def delta_da_sse(d, U, w):
    """Gradient of the SSE over the original data plus ``K`` noisy copies."""
    w, U = _check(d, w, U)
    K = U.shape[-3]
    return (K + 1) * _da_sse_inner(d, U, w)


def r_mse(d, U, w):
    """Average of the per-copy noise terms; tends to ``tau^2 w`` as K grows."""
    w, U = _check(d, w, U)
    K = U.shape[-3]
    if K == 0:
        return np.zeros(U.shape[:-3] + (d.m,))
    return r_sse(d, U, w) / K


def delta_da_mse(d, U, w):
    """Gradient of the MSE over the ``(K+1) n`` augmented samples."""
    w, U = _check(d, w, U)
    K = U.shape[-3]
    return delta_s(d, w) / d.n + (2.0 / d.n) * (K / (K + 1)) * r_mse(d, U, w)


def _mb_grad(Xq, yq, w):
    rho = Xq.shape[-2]
    if Xq.ndim == 2 and w.ndim == 1:
        return (-2.0 / rho) * ((yq - Xq @ w) @ Xq)
    resid = yq - np.einsum("...ij,...j->...i", Xq, w)
    return (-2.0 / rho) * np.einsum("...ij,...i->...j", Xq, resid)


def mb_epoch_plain(d, part, w, eta):
    """One epoch of mini-batch GD over the blocks in order."""
    w, _ = _check(d, w)
    for block in part.blocks:
        w = w - eta * _mb_grad(d.X[block], d.y[block], w)
    return w


def mb_epoch_ridge(d, part, w, eta, lam):
    w, _ = _check(d, w)
    for block in part.blocks:
        w = w - eta * (_mb_grad(d.X[block], d.y[block], w) + 2.0 * lam * w)
    return w


def mb_epoch_da(d, part, U, w, eta, inner_order=None, on_step=None):
    """One epoch over the original data then each noisy copy, block by block.

    The outer loop runs over copies ``k = 0..K`` (``k = 0`` is the original
    data), the inner loop over blocks ``q``.  ``inner_order`` permutes the
    inner loop (used only by negative controls).  ``on_step(k, q, w_prev,
    delta, w_new)`` is called after every update with 0-based ``q``.
    """
    w, U = _check(d, w, U)
    K = U.shape[-3]
    order = range(part.Q) if inner_order is None else list(inner_order)
    for k in range(K + 1):
        for q in order:
            block = part.blocks[q]
            Xq = d.X[block] if k == 0 else d.X[block] + U[..., k - 1, block, :]
            delta = _mb_grad(Xq, d.y[block], w)
            w_new = w - eta * delta
            if on_step is not None:
                on_step(k, q, w, delta, w_new)
            w = w_new
    return w


def mb_epoch_ridge_equiv(d, part, w, eta, K, tau):
    """Mini-batch ridge steps with rate ``(K+1) eta`` and ``lam = K tau^2 / ((K+1) n)``.

    The shrinkage acts on the current inner iterate.
    """
    w, _ = _check(d, w)
    rate = (K + 1) * eta
    shrink = (K / (K + 1)) * (2.0 * tau**2 / d.n)
    for block in part.blocks:
        w = w - rate * (_mb_grad(d.X[block], d.y[block], w) + shrink * w)
    return w


def mb_ridge_lambda(K, tau, n):
    return K * tau**2 / ((K + 1) * n)


def sse_ridge_lambda(K, tau):
    return K * tau**2 / (K + 1)


@dataclass(frozen=True)
class TrainerConfig:
    regime: str
    criterion: str
    eta: float
    epochs: int
    lam: float = 0.0
    partition: BatchPartition = None
    aug: AugmentationSpec = None
    w0: np.ndarray = None

    def validate(self, d=None):
        if self.regime not in REGIMES:
            raise ConfigError(f"unknown regime {self.regime!r}; expected one of {REGIMES}", "regime")
        if self.criterion not in CRITERIA:
            raise ConfigError(f"unknown criterion {self.criterion!r}; expected one of {CRITERIA}", "criterion")
        if not self.eta > 0:
            raise ConfigError(f"learning rate must be > 0, got {self.eta}", "eta")
        if int(self.epochs) != self.epochs or self.epochs < 0:
            raise ConfigError(f"epochs must be a non-negative integer, got {self.epochs}", "epochs")
        if not self.lam >= 0:
            raise ConfigError(f"lambda must be >= 0, got {self.lam}", "lambda")
        if self.criterion == "MB" and self.partition is None:
            raise ConfigError("mini-batch criterion needs a batch partition", "partition")
        if self.regime.startswith("da-") and self.aug is None:
            raise ConfigError(f"regime {self.regime} needs an augmentation spec", "aug")
        if self.regime == "ridge-mb-equiv":
            if self.criterion != "MB":
                raise ConfigError("ridge-mb-equiv is a mini-batch rule; use criterion MB", "criterion")
            if self.aug is None:
                raise ConfigError("ridge-mb-equiv derives its rate and lambda from K and tau", "aug")
        if d is not None:
            if self.partition is not None and self.criterion == "MB" and self.partition.n != d.n:
                raise ConfigError(
                    f"partition covers {self.partition.n} rows, dataset has {d.n}", "partition"
                )
            if self.w0 is not None and np.shape(self.w0) != (d.m,):
                raise ConfigError(f"w0 must have length {d.m}", "w0")


@dataclass
class WeightTrajectory:
    states: np.ndarray
    curve: np.ndarray
    config: TrainerConfig = None

    @property
    def final(self):
        return self.states[-1]


def _bank(d, cfg):
    mode = cfg.regime[3:]
    return NoiseBank(d.n, d.m, replace(cfg.aug, mode=mode))


def train(d, cfg):
    """Run ``cfg.epochs`` epochs and record the original-data MSE after each.

    Epoch ``t`` (1-based) uses noise ``U[t, k]`` from the bank.  Raises
    ``DivergenceError`` as soon as a weight exceeds 1e12 in magnitude.
    """
    cfg.validate(d)
    w = np.zeros(d.m) if cfg.w0 is None else np.asarray(cfg.w0, dtype=np.float64).copy()
    T = int(cfg.epochs)
    states = np.empty((T + 1, d.m))
    curve = np.empty(T + 1)
    states[0] = w
    curve[0] = d.mse(w)

    bank = _bank(d, cfg) if cfg.regime.startswith("da-") else None
    K = cfg.aug.effective_K if cfg.aug is not None else 0
    eta, lam, part = cfg.eta, cfg.lam, cfg.partition
    crit, regime = cfg.criterion, cfg.regime

    for t in range(1, T + 1):
        if regime == "naive":
            if crit == "SSE":
                w = w - eta * delta_s(d, w)
            elif crit == "MSE":
                w = w - eta * (delta_s(d, w) / d.n)
            else:
                w = mb_epoch_plain(d, part, w, eta)
        elif regime == "ridge":
            if crit == "SSE":
                w = w - eta * delta_c(d, w, lam)
            elif crit == "MSE":
                w = w - eta * (delta_s(d, w) / d.n + 2.0 * lam * w)
            else:
                w = mb_epoch_ridge(d, part, w, eta, lam)
        elif regime == "ridge-mb-equiv":
            w = mb_epoch_ridge_equiv(d, part, w, eta, K, cfg.aug.tau)
        else:
            U = bank.copies(t)
            if crit == "SSE":
                # (K+1) eta is the effective rate; keep it as one factor
                w = w - ((K + 1) * eta) * _da_sse_inner(d, U, w)
            elif crit == "MSE":
                w = w - eta * delta_da_mse(d, U, w)
            else:
                w = mb_epoch_da(d, part, U, w, eta)
        big = float(np.max(np.abs(w))) if w.size else 0.0
        if not big <= DIVERGENCE_LIMIT:
            raise DivergenceError(t, big)
        states[t] = w
        curve[t] = d.mse(w)
    return WeightTrajectory(states, curve, cfg)


def ridge_equivalent(cfg, n):
    """The ridge config predicted to match a ``da-*`` config in expectation.

    SSE: rate ``(K+1) eta``, ``lam = K tau^2/(K+1)``.  MSE: rate ``eta``,
    ``lam = K tau^2/((K+1) n)``.  MB: the ``ridge-mb-equiv`` rule.
    """
    K, tau = cfg.aug.effective_K, cfg.aug.tau
    if cfg.criterion == "SSE":
        return replace(cfg, regime="ridge", eta=(K + 1) * cfg.eta, lam=sse_ridge_lambda(K, tau))
    if cfg.criterion == "MSE":
        return replace(cfg, regime="ridge", lam=mb_ridge_lambda(K, tau, n))
    return replace(cfg, regime="ridge-mb-equiv", lam=mb_ridge_lambda(K, tau, n))


__all__ = [
    "CRITERIA",
    "REGIMES",
    "TrainerConfig",
    "WeightTrajectory",
    "delta_c",
    "delta_da_mse",
    "delta_da_sse",
    "delta_s",
    "make_partition",
    "mb_epoch_da",
    "mb_epoch_plain",
    "mb_epoch_ridge",
    "mb_epoch_ridge_equiv",
    "mb_ridge_lambda",
    "r_mse",
    "r_sse",
    "ridge_equivalent",
    "sse_ridge_lambda",
    "train",
]
