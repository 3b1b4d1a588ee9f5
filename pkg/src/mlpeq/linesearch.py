"""Sampled line search along the first-layer increment direction.

Candidate steps are log-spaced fractions of the full increment.  Every
candidate re-fits the output layer, so its metric is the training error of
the network that step would actually produce.  Step 0 is always a candidate,
which makes the search monotone: it never returns a worse network.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numba
import numpy as np

from .network import MlpParams, preactivation
from .solvers import FASTMATH, ProjectionConfig, RowOrder, kaczmarz_sweeps, solve_projection
from .systems import build_s_system, residuals

# bytes of candidate features materialized at once
_CHUNK_BYTES = 32 * 2 ** 20


class Criterion(enum.Enum):
    MSE = "mse"
    MAX_ABS = "max_abs"


@dataclass(frozen=True)
class LineSearchConfig:
    """Sampling of the step fractions.

    ``criterion = MAX_ABS`` selects steps by the largest absolute training
    error instead of the mean squared error.
    """

    n_samples: int = 1000
    t_min_fraction: float = 1e-6
    bisection_iters: int = 20
    criterion: Criterion = Criterion.MSE

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if not 0.0 < self.t_min_fraction < 1.0:
            raise ValueError("t_min_fraction must lie in (0, 1)")
        if self.bisection_iters < 1:
            raise ValueError("bisection_iters must be >= 1")
        object.__setattr__(self, "criterion", Criterion(self.criterion))


@dataclass(frozen=True)
class LineSearchOutcome:
    best_step: float
    best_params: MlpParams
    best_metric: float
    zero_step_chosen: bool
    s_residual: float = float("nan")
    n_evaluations: int = 0
    trace: Tuple[Tuple[float, float], ...] = field(default=(), repr=False)


def sample_steps(cfg: LineSearchConfig) -> np.ndarray:
    """Geometric grid of ``n_samples`` step fractions from ``t_min_fraction`` up to 1."""
    if cfg.n_samples == 1:
        return np.array([1.0])
    steps = np.geomspace(cfg.t_min_fraction, 1.0, cfg.n_samples)
    steps[0], steps[-1] = cfg.t_min_fraction, 1.0
    return steps


def _metric(params, Xn, un, criterion):
    _, mse, max_abs = residuals(params, Xn, un)
    return mse if criterion is Criterion.MSE else max_abs


def evaluate_candidate(params0: MlpParams, deltaW, deltad, step: float, Xn, un,
                       solver_cfg: Optional[ProjectionConfig] = None,
                       criterion: Criterion = Criterion.MSE, warm_start=None):
    """Move the first layer by ``step`` times the increment and re-fit the output layer.

    Returns ``(params, metric, s_residual)``.  A step producing non-finite
    values gives ``metric = inf`` and returns ``params0``.
    """
    if step < 0:
        raise ValueError("step must be >= 0")
    W = params0.W + step * np.asarray(deltaW)
    d = params0.d + step * np.asarray(deltad)
    if not (np.isfinite(W).all() and np.isfinite(d).all()):
        return params0, np.inf, np.inf
    moved = params0.with_first_layer(W, d)
    if warm_start is None:
        warm_start = np.append(params0.s_hat, params0.b)
    try:
        report = solve_projection(build_s_system(moved, Xn, un), solver_cfg, warm_start)
    except FloatingPointError:
        return params0, np.inf, np.inf
    params = moved.with_output(report.x[:-1], report.x[-1])
    metric = _metric(params, Xn, un, criterion) if params.is_finite() else np.inf
    if not np.isfinite(metric):
        return params0, np.inf, np.inf
    return params, metric, report.final_residual_norm


@numba.njit(cache=True, fastmath=FASTMATH)
def _refit_chain(F, un, x0, omega, max_sweeps, tol, shuffle, seed):
    """Re-fit ``(s_hat, b)`` for each feature block ``F[c]`` in turn.

    Each fit is warm-started from the last finite one.  Returns the solutions
    (one row per candidate), mse, max |error| and residual norms.
    """
    m, N, H = F.shape
    K = H + 1
    sols = np.empty((m, K))
    mse = np.full(m, np.inf)
    max_abs = np.full(m, np.inf)
    s_res = np.full(m, np.inf)
    A = np.empty((N, K))
    AT = np.empty((K, N))
    row_sq = np.empty(N)
    col_sq = np.empty(K)
    cols = np.empty(K, dtype=np.int64)
    x = x0.copy()
    for c in range(m):
        sols[c, :] = x
        finite = True
        col_sq[:] = 0.0
        for i in range(N):
            acc = 1.0
            for j in range(H):
                v = F[c, i, j]
                finite = finite and np.isfinite(v)
                A[i, j] = v
                AT[j, i] = v
                acc += v * v
                col_sq[j] += v * v
            row_sq[i] = acc
            A[i, H] = 1.0
            AT[H, i] = 1.0
        col_sq[H] = N
        if not finite:
            continue
        ncols = 0
        for j in range(K):
            if col_sq[j] > 0.0:
                cols[ncols] = j
                ncols += 1
        xc = x.copy()
        kaczmarz_sweeps(A, AT, un, xc, cols[:ncols], row_sq, col_sq, omega, max_sweeps, tol,
                        shuffle, seed)
        acc = 0.0
        worst = 0.0
        for i in range(N):
            e = un[i]
            for k in range(K):
                e -= A[i, k] * xc[k]
            acc += e * e
            worst = max(worst, abs(e))
        if np.isfinite(acc) and np.isfinite(worst):
            sols[c, :] = xc
            mse[c] = acc / N
            max_abs[c] = worst
            s_res[c] = np.sqrt(acc)
            x = xc
    return sols, mse, max_abs, s_res


def line_search(params0: MlpParams, deltaW, deltad, Xn, un,
                cfg: Optional[LineSearchConfig] = None,
                solver_cfg: Optional[ProjectionConfig] = None,
                start_metric: Optional[float] = None,
                start_residual: float = float("nan"),
                record_trace: bool = False) -> LineSearchOutcome:
    """Pick the step fraction along ``(deltaW, deltad)`` with the lowest training error.

    Step 0 (``params0`` unchanged, metric ``start_metric``) and the sampled
    grid are evaluated in ascending order, each re-fit warm-started from the
    previous candidate.  Ties go to the smaller step.  When the smallest
    positive sample wins, ``[0, t_min_fraction]`` is refined by
    ``bisection_iters`` rounds of interval halving that keep the better
    endpoint.

    Parameters
    ----------
    params0 : MlpParams
        Current parameters, with a fitted output layer.
    deltaW, deltad : array_like
        First-layer increment, shapes (H, n) and (H,).
    Xn, un : array_like
        Normalized training inputs and targets.
    cfg : LineSearchConfig, optional
    solver_cfg : ProjectionConfig, optional
        Solver used for the per-candidate re-fits.
    start_metric : float, optional
        Metric of ``params0``; computed when omitted.
    start_residual : float
        Residual norm reported if step 0 wins.
    record_trace : bool
        Keep every ``(step, metric)`` pair evaluated in the outcome.
    """
    cfg = cfg or LineSearchConfig()
    solver_cfg = solver_cfg or ProjectionConfig(
        max_sweeps=3, tol_residual_delta=0.0, row_order=RowOrder.CYCLIC)
    crit = cfg.criterion
    if start_metric is None:
        start_metric = _metric(params0, Xn, un, crit)
    H = params0.n_hidden
    W0, d0 = params0.W, params0.d
    dW = np.asarray(deltaW, dtype=np.float64).reshape(W0.shape)
    dd = np.asarray(deltad, dtype=np.float64).reshape(-1)
    Xn = np.asarray(Xn, dtype=np.float64)
    un = np.ascontiguousarray(un, dtype=np.float64).reshape(-1)
    Y0 = preactivation(params0, Xn)
    dY = Xn @ dW.T + dd
    kargs = solver_cfg.kernel_args()
    chunk = max(1, _CHUNK_BYTES // (8 * Y0.size))

    def run(steps, x0):
        sols, mse, mx, res = [], [], [], []
        for a in range(0, steps.size, chunk):
            ts = steps[a:a + chunk]
            with np.errstate(all="ignore"):
                F = ts[:, None, None] * dY[None]
                F += Y0[None]
                np.tanh(F, out=F)
            out = _refit_chain(F, un, x0, *kargs)
            x0 = out[0][-1]
            for acc, val in zip((sols, mse, mx, res), out):
                acc.append(val)
        metric = np.concatenate(mse if crit is Criterion.MSE else mx)
        return np.concatenate(sols), metric, np.concatenate(res)

    x_start = np.append(params0.s_hat, params0.b)
    steps = sample_steps(cfg)
    sols, metric, s_res = run(steps, x_start)
    trace: List[Tuple[float, float]] = [(0.0, float(start_metric))]
    trace.extend(zip(steps.tolist(), metric.tolist()))

    best = (0.0, x_start, float(start_metric), start_residual)
    for t, sol, m, res in zip(steps, sols, metric, s_res):
        if m < best[2]:
            best = (float(t), sol, float(m), float(res))

    if best[0] > 0.0 and best[0] == steps[0]:
        lo = (0.0, x_start, float(start_metric), start_residual)
        hi = best
        for _ in range(cfg.bisection_iters):
            mid_t = 0.5 * (lo[0] + hi[0])
            sol, m, res = run(np.array([mid_t]), lo[1])
            mid = (mid_t, sol[0], float(m[0]), float(res[0]))
            trace.append((mid_t, mid[2]))
            if mid[2] < best[2] or (mid[2] == best[2] and mid_t < best[0]):
                best = mid
            if lo[2] > hi[2]:
                lo = mid
            else:
                hi = mid

    step, sol, metric, res = best
    if step == 0.0:
        params = params0
    else:
        params = MlpParams(W0 + step * dW, d0 + step * dd, sol[:H], sol[H], params0.activation)
    return LineSearchOutcome(
        best_step=float(step), best_params=params, best_metric=float(metric),
        zero_step_chosen=step == 0.0, s_residual=float(res),
        n_evaluations=len(trace), trace=tuple(trace) if record_trace else ())
