import numpy as np
import pytest

from noisycopies import (
    AugmentationSpec,
    ConfigError,
    Dataset,
    DivergenceError,
    TrainerConfig,
    make_noise_bank,
    partition,
    train,
)
from noisycopies import trainers as tr
from noisycopies.experiments import random_instance
from noisycopies.numkit import GaussSource, gauss_array


def _stacked(d, U):
    Xa = np.concatenate([d.X] + [d.X + u for u in U])
    return Xa, np.tile(d.y, len(U) + 1)


def _noise(seed, K, n, m, tau):
    return gauss_array(GaussSource(seed), (K, n, m), tau / np.sqrt(n))


# --- full-batch gradients -------------------------------------------------------

def test_delta_s_examples(tiny):
    d1 = Dataset([[1.0]], [2.0])
    assert np.array_equal(tr.delta_s(d1, np.zeros(1)), [-4.0])
    w_ls = np.linalg.solve(tiny.X.T @ tiny.X, tiny.X.T @ tiny.y)
    assert np.allclose(tr.delta_s(tiny, w_ls), 0, atol=1e-9)
    w = np.array([0.3, -0.7])
    exact = Dataset(tiny.X, tiny.X @ w)
    assert np.allclose(tr.delta_s(exact, w), 0, atol=1e-14)


def test_delta_s_matches_finite_differences(tiny):
    w = np.array([0.4, -1.2])
    S = lambda v: float(np.sum((tiny.y - tiny.X @ v) ** 2))
    h = 1e-6
    fd = [(S(w + h * e) - S(w - h * e)) / (2 * h) for e in np.eye(2)]
    assert np.allclose(tr.delta_s(tiny, w), fd, rtol=1e-7)


def test_delta_c_examples(tiny):
    w = np.array([0.3, 0.1])
    assert np.array_equal(tr.delta_c(tiny, w, 0.0), tr.delta_s(tiny, w))
    assert np.array_equal(tr.delta_c(Dataset([[1.0]], [2.0]), np.ones(1), 1.0), [0.0])
    assert np.array_equal(tr.delta_c(tiny, np.zeros(2), 3.0), tr.delta_s(tiny, np.zeros(2)))


def test_r_sse_degenerate_cases(tiny):
    w = np.array([1.0, 2.0])
    assert np.array_equal(tr.r_sse(tiny, np.zeros((3, 4, 2)), w), np.zeros(2))
    assert np.array_equal(tr.r_sse(tiny, np.zeros((0, 4, 2)), w), np.zeros(2))


def test_augmented_gradients_match_stacked_data(fig2_data):
    d = fig2_data
    rng = np.random.default_rng(0)
    for K in (1, 3, 6):
        U = _noise(K, K, d.n, d.m, 1.0)
        w = rng.normal(size=d.m)
        Xa, ya = _stacked(d, U)
        g = -2 * Xa.T @ (ya - Xa @ w)
        assert np.allclose(tr.delta_da_sse(d, U, w), g, rtol=1e-12, atol=1e-11)
        assert np.allclose(tr.delta_da_mse(d, U, w), g / ((K + 1) * d.n), rtol=1e-12, atol=1e-13)
        assert np.allclose(tr.r_mse(d, U, w), tr.r_sse(d, U, w) / K)


def test_batched_noise_matches_loop(fig2_data):
    d = fig2_data
    U = gauss_array(GaussSource(5), (7, 3, d.n, d.m), 0.2)
    w = np.linspace(-1, 1, d.m)
    batched = tr.delta_da_sse(d, U, w)
    for i in range(7):
        assert np.allclose(batched[i], tr.delta_da_sse(d, U[i], w), rtol=1e-13, atol=1e-12)


def test_r_sse_expectation(fig2_data):
    d, K, tau = fig2_data, 3, 1.0
    w = np.linspace(-0.5, 0.5, d.m)
    U = gauss_array(GaussSource(8), (10_000, K, d.n, d.m), tau / np.sqrt(d.n))
    r = tr.r_sse(d, U, w)
    se = r.std(axis=0, ddof=1) / np.sqrt(len(r))
    assert np.all(np.abs(r.mean(axis=0) - K * tau**2 * w) < 5 * se)


def test_r_mse_expectation_and_large_k(tiny):
    tau = 1.0
    w = np.array([0.6, -0.8])
    U = gauss_array(GaussSource(1), (10_000, 2, tiny.n, tiny.m), tau / np.sqrt(tiny.n))
    r = tr.r_mse(tiny, U, w)
    se = r.std(axis=0, ddof=1) / np.sqrt(len(r))
    assert np.all(np.abs(r.mean(axis=0) - tau**2 * w) < 5 * se)
    one = tr.r_mse(tiny, gauss_array(GaussSource(2), (10_000, tiny.n, tiny.m), tau / 2.0), w)
    assert np.linalg.norm(one - tau**2 * w) / np.linalg.norm(tau**2 * w) <= 0.1


def test_full_batch_reduction_lattice(fig2_data):
    d = fig2_data
    w = np.linspace(1, -1, d.m)
    zero = np.zeros((4, d.n, d.m))
    ds = tr.delta_s(d, w)
    assert np.array_equal(tr.delta_da_sse(d, zero, w), 5 * ds)
    assert np.array_equal(tr.delta_da_mse(d, zero, w), ds / d.n)
    empty = np.zeros((0, d.n, d.m))
    assert np.array_equal(tr.delta_da_sse(d, empty, w), ds)
    assert np.array_equal(tr.delta_da_mse(d, empty, w), ds / d.n)


def test_single_step_expectations_small_instances():
    for seed in range(5):
        rng = np.random.default_rng(seed)
        n, m, K, tau = int(rng.integers(3, 11)), int(rng.integers(1, 6)), int(rng.integers(1, 5)), 1.0
        d, w = random_instance(100 + seed, n, m)
        U = gauss_array(GaussSource(seed), (10_000, K, n, m), tau / np.sqrt(n))
        ds = tr.delta_s(d, w)
        for samples, closed in (
            (tr.delta_da_sse(d, U, w), (K + 1) * (ds + 2 * (K * tau**2 / (K + 1)) * w)),
            (tr.delta_da_mse(d, U, w), ds / n + (2 * tau**2 / n) * (K / (K + 1)) * w),
        ):
            se = samples.std(axis=0, ddof=1) / np.sqrt(len(samples))
            assert np.all(np.abs(samples.mean(axis=0) - closed) <= 5 * se)


# --- mini-batch epochs ---------------------------------------------------------

def test_mb_epoch_plain_hand_example():
    d = Dataset([[1.0], [1.0]], [1.0, 3.0])
    w = tr.mb_epoch_plain(d, partition(2, 1), np.zeros(1), 0.1)
    assert np.allclose(w, [0.76], rtol=0, atol=1e-15)


def test_mb_epoch_plain_single_block_is_full_batch_mse(tiny):
    w = np.array([0.2, 0.1])
    one = tr.mb_epoch_plain(tiny, partition(4, 4), w, 0.05)
    assert np.allclose(one, w - 0.05 * tr.delta_s(tiny, w) / tiny.n, rtol=1e-14)


def test_mb_epoch_plain_fixed_point():
    w = np.array([1.0, -2.0])
    X = np.arange(12.0).reshape(6, 2)
    d = Dataset(X, X @ w)
    assert np.allclose(tr.mb_epoch_plain(d, partition(6, 2), w, 0.01), w, atol=1e-14)


def test_mb_reductions_are_exact(fig2_data):
    d = fig2_data
    p = partition(20, 5)
    w = np.linspace(-0.3, 0.3, d.m)
    eta = 0.004
    plain = tr.mb_epoch_plain(d, p, w, eta)
    assert np.array_equal(tr.mb_epoch_da(d, p, np.zeros((0, 20, 15)), w, eta), plain)
    twice = tr.mb_epoch_plain(d, p, plain, eta)
    assert np.array_equal(tr.mb_epoch_da(d, p, np.zeros((1, 20, 15)), w, eta), twice)
    assert np.array_equal(tr.mb_epoch_ridge_equiv(d, p, w, eta, 0, 1.0), plain)
    assert np.array_equal(tr.mb_epoch_ridge_equiv(d, p, w, eta, 4, 0.0),
                          tr.mb_epoch_plain(d, p, w, (4 + 1) * eta))


def test_mb_epoch_da_matches_explicit_loop(fig2_data):
    d = fig2_data
    p = partition(20, 5)
    U = _noise(3, 2, 20, 15, 1.0)
    w0 = np.linspace(0, 1, 15)
    w = w0.copy()
    for k in range(3):
        Xk = d.X if k == 0 else d.X + U[k - 1]
        for q in range(4):
            rows = slice(5 * q, 5 * q + 5)
            g = -2 / 5 * Xk[rows].T @ (d.y[rows] - Xk[rows] @ w)
            w = w - 0.01 * g
    assert np.allclose(tr.mb_epoch_da(d, p, U, w0, 0.01), w, rtol=1e-13, atol=1e-14)


def test_mb_ridge_lambda_value():
    assert tr.mb_ridge_lambda(4, 1.0, 20) == pytest.approx(0.04)
    assert tr.sse_ridge_lambda(4, 1.0) == pytest.approx(0.8)


# --- training loops -----------------------------------------------------------

def test_naive_sse_and_mse_curves_agree(fig2_data):
    a = train(fig2_data, TrainerConfig("naive", "SSE", 0.001, 300))
    b = train(fig2_data, TrainerConfig("naive", "MSE", 0.001 * fig2_data.n, 300))
    assert np.max(np.abs(a.curve - b.curve)) <= 1e-10


def test_zero_epochs(fig2_data):
    t = train(fig2_data, TrainerConfig("naive", "SSE", 0.001, 0))
    assert t.curve.shape == (1,) and t.curve[0] == pytest.approx(np.mean(fig2_data.y**2))
    assert t.states.shape == (1, 15)


def test_trajectory_shapes_and_w0(fig2_data):
    w0 = np.full(15, 0.1)
    t = train(fig2_data, TrainerConfig("ridge", "MSE", 0.02, 7, lam=0.1, w0=w0))
    assert t.states.shape == (8, 15) and t.curve.shape == (8,)
    assert np.array_equal(t.states[0], w0) and np.all(t.curve >= 0)


def test_monotone_descent_small_step(fig2_data):
    d = fig2_data
    eta = 0.9 / (2 * np.sum(d.X**2))
    t = train(d, TrainerConfig("naive", "SSE", eta, 200))
    assert np.all(np.diff(t.curve) <= 1e-15)


@pytest.mark.parametrize("regime, crit", [
    ("da-online", "SSE"), ("da-offline", "MSE"), ("da-online", "MB"), ("da-offline", "MB"),
])
def test_determinism(fig2_data, regime, crit):
    p = partition(20, 5)
    cfg = TrainerConfig(regime, crit, 0.001, 25, partition=p, aug=AugmentationSpec(3, 1.0, "online", 6))
    a, b = train(fig2_data, cfg), train(fig2_data, cfg)
    assert a.states.tobytes() == b.states.tobytes()


def test_da_training_uses_bank_noise(fig2_data):
    d = fig2_data
    aug = AugmentationSpec(2, 1.0, "online", 3)
    t = train(d, TrainerConfig("da-online", "MSE", 0.02, 3, aug=aug))
    bank = make_noise_bank(d, aug)
    w = np.zeros(15)
    for ep in (1, 2, 3):
        w = w - 0.02 * tr.delta_da_mse(d, bank.copies(ep), w)
    assert np.array_equal(t.final, w)


def test_offline_differs_from_online(fig2_data):
    aug = AugmentationSpec(2, 1.0, "online", 3)
    on = train(fig2_data, TrainerConfig("da-online", "SSE", 0.001, 5, aug=aug))
    off = train(fig2_data, TrainerConfig("da-offline", "SSE", 0.001, 5, aug=aug))
    assert on.states[1].tobytes() != off.states[2].tobytes()
    assert not np.array_equal(on.final, off.final)


@pytest.mark.parametrize("kwargs, field", [
    (dict(regime="ridge-mb-equiv", criterion="SSE", aug=AugmentationSpec(1, 1.0)), "criterion"),
    (dict(regime="naive", criterion="MB"), "partition"),
    (dict(regime="da-online", criterion="SSE"), "aug"),
    (dict(regime="bogus", criterion="SSE"), "regime"),
    (dict(regime="naive", criterion="SSE", eta=-1.0), "eta"),
])
def test_invalid_configs(fig2_data, kwargs, field):
    base = dict(eta=0.001, epochs=3)
    base.update(kwargs)
    with pytest.raises(ConfigError) as info:
        train(fig2_data, TrainerConfig(**base))
    assert info.value.field == field


def test_divergence_reports_epoch(fig2_data):
    with pytest.raises(DivergenceError) as info:
        train(fig2_data, TrainerConfig("naive", "SSE", 5.0, 500))
    assert 1 <= info.value.epoch < 500
    assert str(info.value.epoch) in str(info.value)


def test_online_da_sse_tracks_ridge(fig2_data):
    d = fig2_data
    cfg = TrainerConfig("da-online", "SSE", 0.001, 1000, aug=AugmentationSpec(4, 1.0, "online", 0))
    ridge = train(d, TrainerConfig("ridge", "SSE", 5 * 0.001, 1000, lam=0.8))
    runs = [train(d, TrainerConfig("da-online", "SSE", 0.001, 1000,
                                   aug=AugmentationSpec(4, 1.0, "online", s))) for s in range(4)]
    band = np.max([np.abs(a.curve - b.curve).max() for a in runs for b in runs])
    assert np.abs(train(d, cfg).curve - ridge.curve).max() <= band
    assert tr.ridge_equivalent(cfg, d.n).lam == pytest.approx(0.8)
