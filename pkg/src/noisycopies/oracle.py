"""Monte-Carlo and algebraic checks of the ridge-equivalence claims."""

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from . import trainers
from .errors import ConfigError, ParameterError, ShapeError
from .numkit import GaussSource, gauss_array

Z_THRESHOLD = 5.0


@dataclass
class Certificate:
    claim_id: str
    mc_estimate: np.ndarray
    std_error: np.ndarray
    closed_form: np.ndarray
    z_max: float
    n_draws: int
    threshold: float = Z_THRESHOLD

    @property
    def passed(self):
        return bool(self.z_max <= self.threshold)

    @property
    def verdict(self):
        return "pass" if self.passed else "fail"

    def line(self):
        return f"{self.claim_id} n_draws={self.n_draws} z_max={self.z_max:.3f} {self.verdict}"


CERT_CSV_HEADER = ["claim_id", "n_draws", "z_max", "threshold", "verdict"]


def report_lines(certs):
    return "\n".join(c.line() for c in certs) + "\n"


def report_csv(certs):
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(CERT_CSV_HEADER)
    for c in certs:
        wr.writerow([c.claim_id, c.n_draws, repr(float(c.z_max)), c.threshold, c.verdict])
    return buf.getvalue()


def z_scores(estimate, se, closed):
    diff = np.abs(np.asarray(estimate) - np.asarray(closed))
    se = np.asarray(se)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, diff / np.where(se > 0, se, 1.0), np.where(diff == 0, 0.0, np.inf))
    return z


class _RunningMoments:
    """Chunk-wise mean / M2 accumulation (Chan et al. pairwise merge)."""

    def __init__(self):
        self.count = 0
        self.mean = None
        self.m2 = None

    def add(self, samples):
        c = samples.shape[0]
        mu = samples.mean(axis=0)
        m2 = ((samples - mu) ** 2).sum(axis=0)
        if self.count == 0:
            self.count, self.mean, self.m2 = c, mu, m2
            return
        tot = self.count + c
        delta = mu - self.mean
        self.mean = self.mean + delta * (c / tot)
        self.m2 = self.m2 + m2 + delta**2 * (self.count * c / tot)
        self.count = tot

    def std_error(self):
        if self.count < 2:
            return np.zeros_like(self.mean)
        return np.sqrt(self.m2 / (self.count - 1) / self.count)


def _noise_chunks(src, n_draws, shape, sd, chunk):
    per_draw = int(np.prod(shape))
    for start in range(0, n_draws, chunk):
        c = min(chunk, n_draws - start)
        yield gauss_array(src, (c,) + tuple(shape), sd, offset=start * per_draw)


def _rule_key(rule):
    if isinstance(rule, str):
        if rule not in ("sse", "mse"):
            raise ConfigError(f"unknown rule {rule!r}; use 'sse', 'mse' or ('mb', k, q)", "rule")
        return rule, None
    if len(rule) == 3 and rule[0] == "mb":
        return "mb", (int(rule[1]), int(rule[2]))
    raise ConfigError(f"unknown rule {rule!r}", "rule")


def closed_form_update(d, w, aug, rule, part=None):
    """Expected update predicted by the ridge-equivalence formulas."""
    kind, kq = _rule_key(rule)
    K, tau = aug.effective_K, aug.tau
    w = np.asarray(w, dtype=np.float64)
    ds = trainers.delta_s(d, w)
    if kind == "sse":
        return (K + 1) * (ds + 2.0 * (K * tau**2 / (K + 1)) * w)
    if kind == "mse":
        return ds / d.n + 2.0 * (tau**2 / d.n) * (K / (K + 1)) * w
    k, q = kq
    block = part.blocks[q]
    g = trainers._mb_grad(d.X[block], d.y[block], w)
    return g if k == 0 else g + (2.0 * tau**2 / d.n) * w


def certify_expected_update(d, w, aug, rule, n_draws, part=None, closed_form=None,
                            claim_id=None, chunk=2000, threshold=Z_THRESHOLD):
    """Compare the MC mean of a noisy update with its closed-form expectation.

    ``rule`` is ``"sse"``, ``"mse"`` or ``("mb", k, q)`` (0-based block
    ``q``, copy ``k``).  Each draw uses fresh noise for every copy, addressed
    by draw index on a stream derived from ``aug.seed`` and the rule.  A
    caller-supplied ``closed_form`` replaces the prediction (negative
    controls).
    """
    if n_draws < 100:
        raise ParameterError(f"n_draws must be >= 100, got {n_draws}")
    kind, kq = _rule_key(rule)
    if kind == "mb":
        if part is None:
            raise ConfigError("rule ('mb', k, q) needs a batch partition", "part")
        k, q = kq
        if not (0 <= k <= aug.effective_K and 0 <= q < part.Q):
            raise ConfigError(f"(k, q) = {kq} outside the configured loop", "rule")
    w = np.asarray(w, dtype=np.float64)
    K = aug.effective_K
    sd = aug.noise_sd(d.n)
    expected = closed_form_update(d, w, aug, rule, part) if closed_form is None \
        else np.asarray(closed_form, dtype=np.float64)
    if claim_id is None:
        claim_id = kind if kq is None else f"mb(k={kq[0]},q={kq[1]})"

    def sample(noise):
        if kind == "sse":
            return trainers.delta_da_sse(d, noise, w)
        if kind == "mse":
            return trainers.delta_da_mse(d, noise, w)
        k, q = kq
        block = part.blocks[q]
        Xq = d.X[block] if k == 0 else d.X[block] + noise
        return trainers._mb_grad(Xq, d.y[block], w)

    if kind == "mb":
        shape = (part.rho, d.m)
        deterministic = kq[0] == 0 or sd == 0
    else:
        shape = (K, d.n, d.m)
        deterministic = K == 0 or sd == 0
    if deterministic:
        # degenerate noise: every draw gives the same update
        est = sample(np.zeros(shape))
        se = np.zeros_like(est)
    else:
        src = GaussSource(aug.seed).child("certify", claim_id, d.n, d.m)
        acc = _RunningMoments()
        for noise in _noise_chunks(src, n_draws, shape, sd, chunk):
            acc.add(sample(noise))
        est, se = acc.mean, acc.std_error()
    z = float(np.max(z_scores(est, se, expected))) if est.size else 0.0
    return Certificate(claim_id, est, se, expected, z, n_draws, threshold)


@dataclass
class RateFit:
    xs: np.ndarray
    ys: np.ndarray
    slope: float
    intercept: float
    degenerate: bool = False


def fit_rate(xs, ys):
    """OLS slope of ``log ys`` against ``log xs``."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.size < 2:
        raise ShapeError("need matching xs, ys with at least two points")
    if np.any(np.diff(xs) <= 0):
        raise ParameterError("xs must be strictly increasing")
    if np.any(ys <= 0):
        return RateFit(xs, ys, math.nan, math.nan, degenerate=True)
    slope, intercept = np.polyfit(np.log(xs), np.log(ys), 1)
    return RateFit(xs, ys, float(slope), float(intercept))


def rate_r_mse(d, w, tau, Ks, seed=0):
    """Distance of one ``r_mse`` draw from ``tau^2 w`` for each K in ``Ks``."""
    Ks = [int(k) for k in Ks]
    if min(Ks) < 10:
        raise ParameterError("smallest K must be >= 10")
    w = np.asarray(w, dtype=np.float64)
    sd = tau / math.sqrt(d.n)
    src = GaussSource(seed).child("rate_r_mse", d.n, d.m)
    ys = []
    for K in Ks:
        U = gauss_array(src.child(K), (K, d.n, d.m), sd)
        ys.append(float(np.linalg.norm(trainers.r_mse(d, U, w) - tau**2 * w)))
    return fit_rate(Ks, ys)


@dataclass
class CurveDistance:
    max_abs: float
    rms: float
    tail_gap: float


def _curve(c):
    return np.asarray(getattr(c, "curve", c), dtype=np.float64)


def compare_curves(a, b, tail_fraction=0.1):
    """Distance metrics between two training curves of equal length.

    ``tail_gap`` is the mean absolute gap over the final ``tail_fraction`` of
    epochs (at least one point).
    """
    a, b = _curve(a), _curve(b)
    if a.shape != b.shape:
        raise ShapeError(f"curve lengths differ: {a.shape} vs {b.shape}")
    gap = np.abs(a - b)
    tail = max(1, int(math.ceil(tail_fraction * gap.size)))
    return CurveDistance(
        float(gap.max()), float(np.sqrt(np.mean(gap**2))), float(gap[-tail:].mean())
    )


def expected_mb_epoch_da(d, part, K, tau, w, eta, n_draws, seed=0, chunk=1000,
                         control_variate=False):
    """MC estimate of the expected augmented mini-batch epoch from ``w``.

    All of the epoch's noise is redrawn for each sample.  With
    ``control_variate`` the first-order-in-eta noise term, whose mean is
    known exactly, is subtracted; the estimator stays unbiased and its error
    scales with ``eta**2`` instead of ``eta``.
    """
    w = np.asarray(w, dtype=np.float64)
    sd = tau / math.sqrt(d.n)
    src = GaussSource(seed).child("mb_epoch", K, d.n, d.m)
    acc = _RunningMoments()
    first_mean = (K + 1) * sum(
        trainers._mb_grad(d.X[b], d.y[b], w) for b in part.blocks
    ) + K * part.Q * (2.0 * tau**2 / d.n) * w
    for U in _noise_chunks(src, n_draws, (K, d.n, d.m), sd, chunk):
        out = trainers.mb_epoch_da(d, part, U, w, eta)
        out = np.broadcast_to(out, (U.shape[0], d.m))
        if control_variate:
            first = sum(trainers._mb_grad(d.X[b], d.y[b], w) for b in part.blocks)
            for k in range(K):
                for b in part.blocks:
                    first = first + trainers._mb_grad(d.X[b] + U[:, k, b, :], d.y[b], w)
            out = out + eta * (first - first_mean)
        acc.add(out)
    return acc.mean, acc.std_error()


def order_of_eta(d, part, K, tau, etas, n_draws, w=None, seed=0, control_variate=False):
    """Gap between the expected augmented MB epoch and the ridge-equivalent epoch.

    The same noise draws are reused for every step size.  Returns a RateFit
    over ascending ``etas``; the slope should be close to 2.
    """
    etas = sorted(float(e) for e in etas)
    if len(etas) < 3:
        raise ParameterError("need at least three step sizes")
    ratios = np.array(etas[1:]) / np.array(etas[:-1])
    if not np.allclose(ratios, ratios[0], rtol=1e-9):
        raise ParameterError("step sizes must form a geometric progression")
    w = np.zeros(d.m) if w is None else np.asarray(w, dtype=np.float64)
    ys = []
    for eta in etas:
        mean, _ = expected_mb_epoch_da(d, part, K, tau, w, eta, n_draws, seed,
                                       control_variate=control_variate)
        ridge = trainers.mb_epoch_ridge_equiv(d, part, w, eta, K, tau)
        big = float(np.max(np.abs(mean)))
        if not big <= trainers.DIVERGENCE_LIMIT:
            raise trainers.DivergenceError(1, big)
        ys.append(float(np.linalg.norm(mean - ridge)))
    return fit_rate(etas, ys)


def telescoping_check(d, part, U, w, eta, inner_order=None, tol=1e-10):
    """Check every iterate of the copy/block double loop against its prefix sum.

    Runs the augmented mini-batch epoch (optionally with a permuted inner
    loop), records each update ``delta[k, q]`` at the iterate it was taken
    from, and verifies ``w[k, q] = w_start - eta * (sum of deltas up to (k, q)
    in canonical order)`` for all prefixes.
    """
    w = np.asarray(w, dtype=np.float64)
    K = np.asarray(U).shape[-3]
    iterates = {}
    deltas = {}

    def record(k, q, w_prev, delta, w_new):
        deltas[k, q] = delta
        iterates[k, q] = w_new

    trainers.mb_epoch_da(d, part, U, w, eta, inner_order=inner_order, on_step=record)
    acc = np.zeros_like(w)
    for k in range(K + 1):
        for q in range(part.Q):
            acc = acc + deltas[k, q]
            predicted = w - eta * acc
            scale = max(1.0, float(np.max(np.abs(predicted))))
            if not np.max(np.abs(iterates[k, q] - predicted)) <= tol * scale:
                return False
    return True
