"""Assembly of the two overdetermined systems driving training.

* the output-layer system: ``[tanh(X W^T + d), 1] @ [s_hat; b] = u``
* the first-order increment system in ``(ds, db, dW, dd)`` around the
  current parameters, one row per training example.

Both are built with whole-array operations, no per-example loops.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .network import ContractError, MlpParams, activation, activation_deriv, preactivation

ColumnBlock = Tuple[str, int, int]  # (name, start, stop)


@dataclass(frozen=True)
class LinearSystem:
    """Dense system ``A @ x ~= r`` with named column blocks."""

    A: np.ndarray
    r: np.ndarray
    col_layout: Tuple[ColumnBlock, ...]

    def __post_init__(self):
        A = np.asarray(self.A, dtype=np.float64)
        r = np.asarray(self.r, dtype=np.float64).reshape(-1)
        if A.ndim != 2 or A.shape[0] != r.shape[0]:
            raise ContractError(f"A has shape {A.shape}, r has {r.shape[0]} entries")
        stop = 0
        for name, a, b in self.col_layout:
            if a != stop or b < a:
                raise ContractError(f"column block {name!r} does not tile the columns")
            stop = b
        if stop != A.shape[1]:
            raise ContractError(f"column layout covers {stop} of {A.shape[1]} columns")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "col_layout", tuple(self.col_layout))

    @property
    def shape(self):
        return self.A.shape

    def block(self, x, name: str) -> np.ndarray:
        """Slice of a solution vector ``x`` belonging to column block ``name``."""
        for blk, a, b in self.col_layout:
            if blk == name:
                return np.asarray(x)[a:b]
        raise KeyError(name)

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.A).all() and np.isfinite(self.r).all())


def _layout(*sizes):
    out, start = [], 0
    for name, size in sizes:
        out.append((name, start, start + size))
        start += size
    return tuple(out)


def _check(params: MlpParams, Xn, un):
    Xn = np.asarray(Xn, dtype=np.float64)
    un = np.asarray(un, dtype=np.float64).reshape(-1)
    if Xn.ndim != 2 or Xn.shape[1] != params.n_inputs:
        raise ContractError(f"Xn must be (N, {params.n_inputs}), got {Xn.shape}")
    if Xn.shape[0] != un.shape[0]:
        raise ContractError(f"Xn has {Xn.shape[0]} rows, un has {un.shape[0]} entries")
    return Xn, un


def feature_matrix(params: MlpParams, Xn) -> np.ndarray:
    """Output-layer coefficient matrix ``[tanh(Xn W^T + d), 1]``, shape (N, H+1)."""
    Y = preactivation(params, Xn)
    A = np.empty((Y.shape[0], Y.shape[1] + 1))
    np.tanh(Y, out=A[:, :-1])
    A[:, -1] = 1.0
    return A


def build_s_system(params: MlpParams, Xn, un) -> LinearSystem:
    """System for the output coefficients ``(s_hat, b)`` at fixed ``W, d``."""
    Xn, un = _check(params, Xn, un)
    H = params.n_hidden
    if Xn.shape[0] < H + 1:
        warnings.warn(f"only {Xn.shape[0]} examples for {H + 1} output unknowns",
                      RuntimeWarning, stacklevel=2)
    return LinearSystem(feature_matrix(params, Xn), un.copy(), _layout(("s_hat", H), ("b", 1)))


def build_increment_system(params: MlpParams, Xn, un) -> LinearSystem:
    """First-order increment system around ``params``.

    Columns are ``[ds (H), db (1), dW row-major (H*n), dd (H)]``; row ``i`` is
    the gradient of ``s_hat @ tanh(W x_i + d) + b`` with respect to those
    parameters and ``r_i = u_i - forward(params, x_i)``.
    """
    Xn, un = _check(params, Xn, un)
    N, n = Xn.shape
    H = params.n_hidden
    Y = preactivation(params, Xn)
    S = activation(Y)
    G = activation_deriv(Y) * params.s_hat  # (N, H): s_j * tanh'(y_ij)
    A = np.empty((N, 2 * H + 1 + H * n))
    A[:, :H] = S
    A[:, H] = 1.0
    A[:, H + 1:H + 1 + H * n] = (G[:, :, None] * Xn[:, None, :]).reshape(N, H * n)
    A[:, H + 1 + H * n:] = G
    r = un - (S @ params.s_hat + params.b)
    system = LinearSystem(A, r, _layout(("ds", H), ("db", 1), ("dW", H * n), ("dd", H)))
    if not system.is_finite():
        raise FloatingPointError("increment system has non-finite entries")
    return system


def residuals(params: MlpParams, Xn, un):
    """Training residuals ``u_i - forward(params, x_i)``.

    Returns
    -------
    res : ndarray (N,)
    mse : float
    max_abs : float
    """
    Xn, un = _check(params, Xn, un)
    S = activation(preactivation(params, Xn))
    res = un - (S @ params.s_hat + params.b)
    return res, float(np.mean(res * res)), float(np.max(np.abs(res)))


def save_system_csv(system: LinearSystem, path) -> None:
    """Debug dump: one row per equation, columns ``a_1..a_K,r``."""
    K = system.A.shape[1]
    header = ",".join([f"a{k + 1}" for k in range(K)] + ["r"])
    np.savetxt(path, np.column_stack([system.A, system.r]), delimiter=",",
               fmt="%.17g", header=header, comments="")
