"""Least-squares solvers for overdetermined systems.

:func:`solve_projection` is an extended Kaczmarz iteration.  Each sweep first
deflates the column-space component out of an auxiliary vector ``z``
(projections onto the columns), then projects the iterate onto every row
hyperplane of ``A x = r - z``.  ``z`` converges to the part of ``r`` orthogonal
to range(A), so on inconsistent systems the iterate approaches the
least-squares point instead of cycling around it.

:func:`solve_reference` is a dense orthogonal-factorization solve, used as
the validation oracle and as an optional fallback.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np
import scipy.linalg

from .systems import LinearSystem

# no 'nnan'/'ninf': finiteness checks must survive optimization
FASTMATH = {"reassoc", "contract", "nsz", "arcp"}


class RowOrder(enum.Enum):
    CYCLIC = "cyclic"
    RANDOM_PERMUTATION = "random_permutation"


@dataclass(frozen=True)
class ProjectionConfig:
    """Settings of :func:`solve_projection`.

    A solve stops after ``max_sweeps`` sweeps, or earlier once a sweep changes
    the residual norm by less than ``tol_residual_delta``.
    """

    max_sweeps: int = 500
    relaxation: float = 1.0
    row_order: RowOrder = RowOrder.RANDOM_PERMUTATION
    tol_residual_delta: float = 1e-12
    seed: int = 0

    def __post_init__(self):
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be >= 1")
        if not 0.0 < self.relaxation <= 2.0:
            raise ValueError("relaxation must lie in (0, 2]")
        if self.tol_residual_delta < 0:
            raise ValueError("tol_residual_delta must be >= 0")
        object.__setattr__(self, "row_order", RowOrder(self.row_order))

    def kernel_args(self):
        return (float(self.relaxation), int(self.max_sweeps), float(self.tol_residual_delta),
                self.row_order is RowOrder.RANDOM_PERMUTATION, int(self.seed) % (2 ** 32))


@dataclass(frozen=True)
class SolveReport:
    x: np.ndarray
    sweeps_used: int
    final_residual_norm: float
    converged: bool


@numba.njit(cache=True, fastmath=FASTMATH)
def _residual_sq(A, x, r):
    total = 0.0
    for i in range(A.shape[0]):
        acc = -r[i]
        for k in range(A.shape[1]):
            acc += A[i, k] * x[k]
        total += acc * acc
    return total


@numba.njit(cache=True, fastmath=FASTMATH)
def extended_kaczmarz(A, AT, r, x, cols, omega, max_sweeps, tol, shuffle, seed):
    """Extended Kaczmarz sweeps on a system without zero rows, updating ``x`` in place.

    ``AT`` is a contiguous copy of ``A.T``; ``cols`` lists the nonzero columns.
    Returns ``(sweeps, residual_norm, converged)``; ``residual_norm`` is NaN
    when ``tol == 0``.
    """
    N, K = A.shape
    row_sq = np.empty(N)
    for i in range(N):
        acc = 0.0
        for k in range(K):
            acc += A[i, k] * A[i, k]
        row_sq[i] = acc
    col_sq = np.empty(K)
    for j in range(K):
        acc = 0.0
        for i in range(N):
            acc += AT[j, i] * AT[j, i]
        col_sq[j] = acc
    return kaczmarz_sweeps(A, AT, r, x, cols, row_sq, col_sq, omega, max_sweeps, tol,
                           shuffle, seed)


@numba.njit(cache=True, fastmath=FASTMATH)
def kaczmarz_sweeps(A, AT, r, x, cols, row_sq, col_sq, omega, max_sweeps, tol, shuffle, seed):
    """Sweep loop of :func:`extended_kaczmarz` with precomputed squared row/column norms."""
    N, K = A.shape
    # z0 = r - A x0 shares its range(A)-orthogonal part with r
    z = r.copy()
    for i in range(N):
        for k in range(K):
            z[i] -= A[i, k] * x[k]
    np.random.seed(seed)
    order = np.arange(N)
    # tol == 0 can never trigger, so skip the per-sweep residual
    check = tol > 0.0
    prev = np.sqrt(_residual_sq(A, x, r)) if check else 0.0
    sweeps = 0
    converged = False
    for _ in range(max_sweeps):
        for j in cols:
            dot = 0.0
            for i in range(N):
                dot += AT[j, i] * z[i]
            c = dot / col_sq[j]
            for i in range(N):
                z[i] -= c * AT[j, i]
        if shuffle:
            np.random.shuffle(order)
        for i in order:
            dot = 0.0
            for k in range(K):
                dot += A[i, k] * x[k]
            c = omega * (r[i] - z[i] - dot) / row_sq[i]
            for k in range(K):
                x[k] += c * A[i, k]
        sweeps += 1
        if check:
            cur = np.sqrt(_residual_sq(A, x, r))
            delta = abs(prev - cur)
            prev = cur
            if delta < tol:
                converged = True
                break
    return sweeps, prev if check else np.nan, converged


def solve_projection(system: LinearSystem, cfg: Optional[ProjectionConfig] = None,
                     warm_start=None) -> SolveReport:
    """Approximate least-squares solution of ``system`` by successive projections.

    Zero rows and zero columns are removed before iterating, so padding a
    system with zero rows leaves ``x`` bit-identical.  Unknowns of zero
    columns keep their starting value.  The result is a deterministic
    function of ``(system, cfg, warm_start)``.
    """
    cfg = cfg or ProjectionConfig()
    _check_finite(system)
    A, r = system.A, system.r
    K = A.shape[1]
    if warm_start is None:
        x = np.zeros(K)
    else:
        x = np.array(warm_start, dtype=np.float64).reshape(-1)
        if x.shape != (K,):
            raise ValueError(f"warm_start has length {x.size}, system has {K} unknowns")
        if not np.isfinite(x).all():
            raise FloatingPointError("warm_start contains NaN or Inf")
    nz = A != 0.0
    rows = np.flatnonzero(nz.any(axis=1))
    cols = np.flatnonzero(nz.any(axis=0))
    if rows.size == 0:
        return SolveReport(x, 0, float(np.linalg.norm(r)), False)
    Ac = np.ascontiguousarray(A[np.ix_(rows, cols)])
    xc = x[cols].copy()
    sweeps, _, converged = extended_kaczmarz(
        Ac, np.ascontiguousarray(Ac.T), np.ascontiguousarray(r[rows]), xc,
        np.arange(cols.size), *cfg.kernel_args())
    x[cols] = xc
    return SolveReport(x, int(sweeps), float(np.linalg.norm(A @ x - r)), bool(converged))


def solve_reference(system: LinearSystem) -> np.ndarray:
    """Minimum-norm least-squares solution via complete orthogonal factorization."""
    _check_finite(system)
    cutoff = np.finfo(np.float64).eps * max(system.A.shape)
    x, *_ = scipy.linalg.lstsq(system.A, system.r, cond=cutoff, lapack_driver="gelsy")
    return x


def _check_finite(system: LinearSystem):
    if not system.is_finite():
        raise FloatingPointError("linear system contains NaN or Inf")
