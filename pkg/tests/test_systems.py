import math

import numpy as np
import pytest

from mlpeq.data import normalize, sample_schwefel
from mlpeq.network import ContractError, MlpParams, forward
from mlpeq.solvers import solve_reference
from mlpeq.systems import (LinearSystem, build_increment_system, build_s_system, residuals,
                           save_system_csv)

from conftest import random_params


def output(theta, H, n, x):
    """Network output from a flat parameter vector laid out like the increment system."""
    s, b = theta[:H], theta[H]
    W = theta[H + 1:H + 1 + H * n].reshape(H, n)
    d = theta[H + 1 + H * n:]
    return s @ np.tanh(W @ x + d) + b


def flat(p):
    return np.concatenate([p.s_hat, [p.b], p.W.ravel(), p.d])


def test_s_system_zero_first_layer(rng):
    p = MlpParams(np.zeros((3, 2)), np.zeros(3), np.zeros(3), 0.0)
    X, u = rng.normal(size=(8, 2)), rng.normal(size=8)
    sys_ = build_s_system(p, X, u)
    np.testing.assert_array_equal(sys_.A, np.column_stack([np.zeros((8, 3)), np.ones(8)]))
    assert solve_reference(sys_)[-1] == pytest.approx(u.mean(), abs=1e-14)
    assert sys_.col_layout == (("s_hat", 0, 3), ("b", 3, 4))


def test_s_system_scalar_row():
    p = MlpParams([[1.0]], [0.0], [0.0], 0.0)
    with pytest.warns(RuntimeWarning):
        sys_ = build_s_system(p, [[1.0]], [0.9])
    assert sys_.A[0, 0] == pytest.approx(math.tanh(1.0), abs=1e-15)
    assert sys_.A[0, 1] == 1.0 and sys_.r[0] == 0.9


def test_s_system_protocol_shape():
    Xn, un, _ = normalize(sample_schwefel(5152, 3, seed=0))
    p = MlpParams(np.full((200, 3), 0.1), np.zeros(200), np.zeros(200), 0.0)
    assert build_s_system(p, Xn, un).A.shape == (5152, 201)


def test_s_system_underdetermined_warns(rng):
    p = random_params(rng, 5, 1)
    with pytest.warns(RuntimeWarning):
        build_s_system(p, rng.normal(size=(3, 1)), rng.normal(size=3))


def test_increment_system_scalar_example():
    p = MlpParams([[1.0]], [0.0], [0.5], 0.0)
    sys_ = build_increment_system(p, [[2.0]], [1.0])
    t2 = math.tanh(2.0)
    dt2 = 1.0 - t2 * t2
    np.testing.assert_allclose(sys_.A[0], [t2, 1.0, 0.5 * dt2 * 2.0, 0.5 * dt2], rtol=1e-15)
    assert sys_.r[0] == pytest.approx(1.0 - 0.5 * t2, abs=1e-15)
    assert [blk[0] for blk in sys_.col_layout] == ["ds", "db", "dW", "dd"]


def test_increment_system_matches_finite_differences(rng):
    h = 1e-6
    worst = 0.0
    for _ in range(100):
        H, n, N = (int(v) for v in rng.integers(1, [6, 4, 21]))
        p = random_params(rng, H, n)
        X, u = rng.normal(size=(N, n)), rng.normal(size=N)
        A = build_increment_system(p, X, u).A
        theta = flat(p)
        for k in range(theta.size):
            e = np.zeros_like(theta)
            e[k] = h
            fd = np.array([(output(theta + e, H, n, x) - output(theta - e, H, n, x)) / (2 * h)
                           for x in X])
            worst = max(worst, np.linalg.norm(A[:, k] - fd) / np.linalg.norm(fd))
    assert worst < 1e-5


def test_increment_rhs_is_residual(rng):
    p = random_params(rng, 4, 3)
    X, u = rng.normal(size=(15, 3)), rng.normal(size=15)
    sys_ = build_increment_system(p, X, u)
    res, _, _ = residuals(p, X, u)
    np.testing.assert_array_equal(sys_.r, res)
    np.testing.assert_array_equal(sys_.r, u - forward(p, X))


def test_increment_system_fitted_data_gives_zero_increment(rng):
    p = random_params(rng, 3, 2)
    X = rng.normal(size=(20, 2))
    sys_ = build_increment_system(p, X, forward(p, X))
    np.testing.assert_array_equal(sys_.r, 0.0)
    np.testing.assert_array_equal(solve_reference(sys_), 0.0)


def test_increment_system_rejects_nonfinite(rng):
    p = MlpParams([[1.0]], [0.0], [np.inf], 0.0)
    with pytest.raises(FloatingPointError):
        build_increment_system(p, [[1.0]], [0.0])


def test_residuals_examples(rng):
    p = random_params(rng, 3, 2)
    X = rng.normal(size=(12, 2))
    res, mse, mx = residuals(p, X, forward(p, X))
    assert mse == 0.0 and mx == 0.0 and not res.any()
    u = rng.normal(size=12)
    res, mse, _ = residuals(p.with_output(np.zeros(3), 0.0), X, u)
    np.testing.assert_array_equal(res, u)
    assert mse == pytest.approx(np.mean(u ** 2), rel=1e-15)


def test_residual_mse_two_pass_oracle(rng):
    p = random_params(rng, 5, 3)
    X, u = rng.normal(size=(40, 3)), rng.normal(size=40)
    _, mse, mx = residuals(p, X, u)
    total = 0.0
    errs = []
    for x, t in zip(X, u):
        errs.append(t - float(p.s_hat @ np.tanh(p.W @ x + p.d) + p.b))
    for e in errs:
        total += e * e
    assert abs(mse - total / len(errs)) < 1e-14
    assert mx == pytest.approx(max(abs(e) for e in errs), rel=1e-12)


def test_dimension_errors(rng):
    p = random_params(rng, 2, 3)
    with pytest.raises(ContractError):
        build_s_system(p, rng.normal(size=(5, 2)), np.zeros(5))
    with pytest.raises(ContractError):
        build_increment_system(p, rng.normal(size=(5, 3)), np.zeros(4))
    with pytest.raises(ContractError):
        LinearSystem(np.zeros((3, 2)), np.zeros(3), (("a", 0, 1),))


def test_system_csv_dump(tmp_path, rng):
    p = random_params(rng, 2, 1)
    sys_ = build_increment_system(p, rng.normal(size=(6, 1)), rng.normal(size=6))
    path = tmp_path / "inc.csv"
    save_system_csv(sys_, path)
    back = np.loadtxt(path, delimiter=",", skiprows=1)
    np.testing.assert_array_equal(back[:, :-1], sys_.A)
    np.testing.assert_array_equal(back[:, -1], sys_.r)
