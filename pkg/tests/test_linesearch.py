import numpy as np
import pytest

from mlpeq.linesearch import (Criterion, LineSearchConfig, evaluate_candidate, line_search,
                              sample_steps)
from mlpeq.network import MlpParams, forward
from mlpeq.solvers import ProjectionConfig, solve_reference
from mlpeq.systems import build_s_system, residuals

ACCURATE = ProjectionConfig(max_sweeps=300, tol_residual_delta=0.0)


def ls_fit(params, Xn, un):
    x = solve_reference(build_s_system(params, Xn, un))
    return params.with_output(x[:-1], x[-1])


def ray_problem(rng, t_opt):
    """1-D teacher data and a start point whose ray hits the teacher at step ``t_opt``."""
    teacher = MlpParams([[1.5], [-0.8]], [0.3, -0.2], [1.0, 0.7], 0.1)
    Xn = np.linspace(-1, 1, 40)[:, None]
    un = forward(teacher, Xn)
    dW = np.array([[0.3], [0.2]])
    dd = np.array([-0.15, 0.2])
    start = teacher.with_first_layer(teacher.W - t_opt * dW, teacher.d - t_opt * dd)
    return ls_fit(start, Xn, un), dW, dd, Xn, un


def dense_oracle(params0, dW, dd, Xn, un, steps):
    """Exact least-squares output-layer mse along the ray, via batched normal equations."""
    Y = (Xn @ params0.W.T + params0.d)[None] + steps[:, None, None] * (Xn @ dW.T + dd)[None]
    A = np.concatenate([np.tanh(Y), np.ones(Y.shape[:2] + (1,))], axis=2)
    G = np.einsum("mni,mnj->mij", A, A)
    rhs = np.einsum("mni,n->mi", A, un)
    coef = np.linalg.solve(G, rhs[..., None])[..., 0]
    res = un[None] - np.einsum("mni,mi->mn", A, coef)
    return np.mean(res ** 2, axis=1)


def test_sample_steps_examples():
    np.testing.assert_array_equal(sample_steps(LineSearchConfig(n_samples=1)), [1.0])
    np.testing.assert_allclose(sample_steps(LineSearchConfig(n_samples=3, t_min_fraction=1e-4)),
                               [1e-4, 1e-2, 1.0], rtol=1e-14)
    steps = sample_steps(LineSearchConfig())
    assert steps.size == 1000 and steps[0] == 1e-6 and steps[-1] == 1.0
    ratios = steps[1:] / steps[:-1]
    assert np.all(np.diff(steps) > 0)
    assert np.max(np.abs(ratios - ratios[0])) < 1e-12


def test_config_validation():
    with pytest.raises(ValueError):
        LineSearchConfig(n_samples=0)
    with pytest.raises(ValueError):
        LineSearchConfig(t_min_fraction=1.0)
    with pytest.raises(ValueError):
        LineSearchConfig(bisection_iters=0)


def test_zero_step_candidate_keeps_metric(rng):
    params, dW, dd, Xn, un = ray_problem(rng, 0.5)
    _, start, _ = residuals(params, Xn, un)
    _, metric, _ = evaluate_candidate(params, dW, dd, 0.0, Xn, un, ACCURATE)
    assert metric == pytest.approx(start, rel=1e-9)


def test_zero_direction_metric_constant(rng):
    params, dW, dd, Xn, un = ray_problem(rng, 0.5)
    metrics = {evaluate_candidate(params, 0 * dW, 0 * dd, t, Xn, un, ACCURATE)[1]
               for t in (0.0, 1e-3, 0.5, 1.0)}
    assert len(metrics) == 1


def test_nonfinite_candidate_rejected(rng):
    params, dW, dd, Xn, un = ray_problem(rng, 0.5)
    bad = dW.copy()
    bad[0, 0] = np.inf
    p, metric, _ = evaluate_candidate(params, bad, dd, 1.0, Xn, un)
    assert metric == np.inf and p is params


def test_sampled_argmin_matches_dense_grid(rng):
    params, dW, dd, Xn, un = ray_problem(rng, 0.37)
    dense = np.linspace(0.0, 1.0, 100_001)
    t_dense = dense[np.argmin(dense_oracle(params, dW, dd, Xn, un, dense))]
    out = line_search(params, dW, dd, Xn, un, LineSearchConfig(), ACCURATE)
    steps = sample_steps(LineSearchConfig())
    k = np.searchsorted(steps, out.best_step)
    spacing = steps[min(k + 1, steps.size - 1)] - steps[max(k - 1, 0)]
    assert abs(out.best_step - t_dense) <= spacing
    assert out.best_step == pytest.approx(0.37, abs=0.01)


def test_monotone_ray_takes_full_step(rng):
    params, dW, dd, Xn, un = ray_problem(rng, 1.0)
    dense = np.linspace(0.0, 1.0, 2001)
    assert np.all(np.diff(dense_oracle(params, dW, dd, Xn, un, dense)) < 0)
    out = line_search(params, dW, dd, Xn, un, LineSearchConfig(n_samples=200), ACCURATE)
    assert out.best_step == 1.0 and not out.zero_step_chosen
    assert out.n_evaluations == 201


def test_refinement_below_smallest_sample(rng):
    params, dW, dd, Xn, un = ray_problem(rng, 0.5)
    cfg = LineSearchConfig(n_samples=10, t_min_fraction=0.7, bisection_iters=12)
    out = line_search(params, dW, dd, Xn, un, cfg, ACCURATE, record_trace=True)
    smallest = out.trace[1]
    assert smallest[0] == 0.7
    assert all(m > smallest[1] for _, m in out.trace[2:11])
    assert out.n_evaluations == 10 + 1 + 12
    assert out.best_metric <= smallest[1]
    assert 0.0 < out.best_step < 0.7
    # interval halving is a heuristic; it should still land near the ray minimum
    assert out.best_step == pytest.approx(0.5, abs=0.1)


def test_exactly_fitted_start_keeps_zero_step(rng):
    teacher = MlpParams(rng.normal(size=(3, 2)), rng.normal(size=3), rng.normal(size=3), 0.2)
    Xn = rng.uniform(-1, 1, size=(30, 2))
    un = forward(teacher, Xn)
    out = line_search(teacher, rng.normal(size=(3, 2)), rng.normal(size=3), Xn, un)
    assert out.zero_step_chosen and out.best_step == 0.0 and out.best_params is teacher
    assert out.best_metric == 0.0


def test_monotone_safety_random_directions(rng):
    for _ in range(10):
        p = MlpParams(rng.normal(size=(4, 2)), rng.normal(size=4), np.zeros(4), 0.0)
        Xn = rng.uniform(-1, 1, size=(25, 2))
        un = np.sin(3 * Xn[:, 0]) * Xn[:, 1]
        p = ls_fit(p, Xn, un)
        _, start, _ = residuals(p, Xn, un)
        out = line_search(p, rng.normal(size=(4, 2)), rng.normal(size=4), Xn, un,
                          LineSearchConfig(n_samples=50))
        assert out.best_metric <= start
        _, mse, _ = residuals(out.best_params, Xn, un)
        assert mse == pytest.approx(out.best_metric, rel=1e-10, abs=1e-15)


def test_deterministic_repeat(rng):
    params, dW, dd, Xn, un = ray_problem(rng, 0.3)
    a = line_search(params, dW, dd, Xn, un, record_trace=True)
    b = line_search(params, dW, dd, Xn, un, record_trace=True)
    assert a.trace == b.trace and a.best_step == b.best_step
    assert np.array_equal(a.best_params.s_hat, b.best_params.s_hat)


def test_scan_agrees_with_evaluate_candidate(rng):
    params, dW, dd, Xn, un = ray_problem(rng, 0.8)
    cfg = ProjectionConfig(max_sweeps=7, tol_residual_delta=0.0)
    out = line_search(params, dW, dd, Xn, un, LineSearchConfig(n_samples=1), cfg,
                      record_trace=True)
    ref, metric, _ = evaluate_candidate(params, dW, dd, 1.0, Xn, un, cfg)
    assert out.trace[1][0] == 1.0
    assert out.trace[1][1] == pytest.approx(metric, rel=1e-9)
    if out.best_step == 1.0:
        np.testing.assert_allclose(out.best_params.s_hat, ref.s_hat, rtol=1e-9, atol=1e-12)


def test_max_abs_criterion(rng):
    params, dW, dd, Xn, un = ray_problem(rng, 0.5)
    _, _, start = residuals(params, Xn, un)
    out = line_search(params, dW, dd, Xn, un, LineSearchConfig(criterion="max_abs"), ACCURATE)
    _, _, after = residuals(out.best_params, Xn, un)
    assert out.best_metric <= start
    assert after == pytest.approx(out.best_metric, rel=1e-9)
    assert LineSearchConfig(criterion="max_abs").criterion is Criterion.MAX_ABS
