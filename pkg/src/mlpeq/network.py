"""Single-hidden-layer regressive MLP: parameters and forward evaluation.

The network maps an input ``x`` (length ``n``) to a scalar through

    y = W @ x + d,   h = tanh(y),   u = s_hat @ h + b

All arrays are float64.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class ContractError(ValueError):
    """Raised when array shapes or values violate an operation's contract."""


class ActivationKind(enum.Enum):
    TANH_SIGMOID = "tanh"


def activation(z):
    """Hidden-layer activation, the hyperbolic tangent (works on scalars and arrays)."""
    return np.tanh(z)


def activation_deriv(z):
    """Derivative of :func:`activation`, ``1 - tanh(z)**2``."""
    t = np.tanh(z)
    return 1.0 - t * t


@dataclass(frozen=True)
class MlpParams:
    """Parameters of a one-output MLP.

    Attributes
    ----------
    W : ndarray, shape (H, n)
        First-layer weights.
    d : ndarray, shape (H,)
        First-layer bias.
    s_hat : ndarray, shape (H,)
        Output coefficients applied to the feature vector.
    b : float
        Output intercept.
    """

    W: np.ndarray
    d: np.ndarray
    s_hat: np.ndarray
    b: float
    activation: ActivationKind = ActivationKind.TANH_SIGMOID

    def __post_init__(self):
        W = np.array(self.W, dtype=np.float64, ndmin=2)
        d = np.array(self.d, dtype=np.float64).reshape(-1)
        s = np.array(self.s_hat, dtype=np.float64).reshape(-1)
        if W.ndim != 2:
            raise ContractError(f"W must be 2-D, got shape {W.shape}")
        H = W.shape[0]
        if d.shape != (H,) or s.shape != (H,):
            raise ContractError(
                f"inconsistent sizes: W has {H} rows, len(d)={d.size}, len(s_hat)={s.size}")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "s_hat", s)
        object.__setattr__(self, "b", float(self.b))

    @property
    def n_hidden(self) -> int:
        return self.W.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.W.shape[1]

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.W).all() and np.isfinite(self.d).all()
                    and np.isfinite(self.s_hat).all() and np.isfinite(self.b))

    def with_output(self, s_hat, b) -> "MlpParams":
        return MlpParams(self.W, self.d, s_hat, b, self.activation)

    def with_first_layer(self, W, d) -> "MlpParams":
        return MlpParams(W, d, self.s_hat, self.b, self.activation)


def _as_inputs(params: MlpParams, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != params.n_inputs:
        raise ContractError(
            f"input has {X.shape[-1]} columns, network expects n={params.n_inputs}")
    return X


def preactivation(params: MlpParams, X) -> np.ndarray:
    """Hidden pre-activations ``X @ W.T + d`` for a batch, shape (N, H)."""
    X = _as_inputs(params, X)
    return X @ params.W.T + params.d


def feature_map(params: MlpParams, x) -> np.ndarray:
    """Feature-space image ``tanh(W @ x + d)``.

    A single input vector gives shape (H,); a batch (N, n) gives (N, H).
    """
    x = np.asarray(x, dtype=np.float64)
    h = activation(preactivation(params, x))
    return h[0] if x.ndim == 1 else h


def forward(params: MlpParams, x):
    """Network output ``s_hat @ feature_map(x) + b`` (scalar, or (N,) for a batch)."""
    return feature_map(params, x) @ params.s_hat + params.b
