"""Training loop: alternate output-layer fits with first-layer increment steps.

One epoch:

1. re-fit ``(s_hat, b)`` on the current features (kept only if it does not
   raise the training error);
2. build the first-order increment system and solve it by projections;
3. keep only the ``dW, dd`` part of the solution;
4. line-search along ``(dW, dd)``, re-fitting the output layer per candidate;
5. adopt the best candidate and check the stopping rules.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from .data import Dataset, NormalizationSpec, normalize
from .linesearch import Criterion, LineSearchConfig, line_search
from .network import ContractError, MlpParams
from .solvers import ProjectionConfig, RowOrder, solve_projection
from .systems import build_increment_system, build_s_system, residuals

log = logging.getLogger(__name__)


class StopReason(enum.Enum):
    MAX_EPOCHS = "MaxEpochs"
    MIN_DELTA = "MinDelta"
    ZERO_STEP = "ZeroStep"
    TARGET_REACHED = "TargetReached"


class NumericalError(RuntimeError):
    """Training produced non-finite values."""


@dataclass(frozen=True)
class TrainConfig:
    """Macro-parameters of a training run.

    ``solver_epoch`` drives the per-epoch output fit and the increment solve;
    ``solver_linesearch`` drives the cheaper warm-started re-fits of the line
    search candidates.
    """

    hidden_units: int = 200
    max_epochs: int = 4000
    min_mse_delta: float = 1e-12
    init_scale: float = 1.0
    seed: int = 0
    line_search: LineSearchConfig = field(default_factory=LineSearchConfig)
    solver_epoch: ProjectionConfig = field(default_factory=lambda: ProjectionConfig(max_sweeps=500))
    solver_linesearch: ProjectionConfig = field(
        default_factory=lambda: ProjectionConfig(
            max_sweeps=3, tol_residual_delta=0.0, row_order=RowOrder.CYCLIC))
    target_mse: Optional[float] = None

    def __post_init__(self):
        if self.hidden_units < 1:
            raise ValueError("hidden_units must be >= 1")
        if self.max_epochs < 0:
            raise ValueError("max_epochs must be >= 0")
        if self.min_mse_delta < 0:
            raise ValueError("min_mse_delta must be >= 0")
        if self.init_scale < 0:
            raise ValueError("init_scale must be >= 0")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    mse: float
    max_abs_err: float
    step_len: float
    s_residual: float
    stop_reason: Optional[StopReason] = None


def init_params(n: int, cfg: TrainConfig) -> MlpParams:
    """Uniform first layer on ``[-init_scale/sqrt(n), init_scale/sqrt(n)]``, zero output layer."""
    if n < 1:
        raise ContractError("n must be >= 1")
    H = cfg.hidden_units
    bound = cfg.init_scale / np.sqrt(n)
    rng = np.random.default_rng(cfg.seed)
    W = rng.uniform(-bound, bound, size=(H, n))
    d = rng.uniform(-bound, bound, size=H)
    return MlpParams(W, d, np.zeros(H), 0.0)


def fit_output_layer(params: MlpParams, Xn, un, solver_cfg: Optional[ProjectionConfig] = None,
                     warm: bool = False) -> Tuple[MlpParams, float]:
    """Least-squares output layer at fixed first layer.

    Returns the refreshed params and the final residual norm of the fit.
    ``warm`` starts the projections from the current ``(s_hat, b)``.
    """
    system = build_s_system(params, Xn, un)
    start = np.append(params.s_hat, params.b) if warm else None
    report = solve_projection(system, solver_cfg, start)
    return params.with_output(report.x[:-1], report.x[-1]), report.final_residual_norm


def train_epoch(params: MlpParams, Xn, un, cfg: TrainConfig,
                epoch: int = 1) -> Tuple[MlpParams, EpochRecord]:
    """Run one epoch from ``params`` (which must carry a fitted output layer).

    The returned record has ``stop_reason`` set to ``ZeroStep`` when the line
    search keeps the current parameters; the other stop rules are applied by
    :func:`train`.
    """
    _, mse0, max0 = residuals(params, Xn, un)
    if not np.isfinite(mse0):
        raise NumericalError(f"epoch {epoch}: non-finite training error at epoch start")
    refit, s_res = fit_output_layer(params, Xn, un, cfg.solver_epoch, warm=True)
    _, mse_refit, _ = residuals(refit, Xn, un)
    if mse_refit <= mse0:
        params, mse0 = refit, mse_refit
    else:
        s_res = float(np.sqrt(mse0 * len(un)))

    system = build_increment_system(params, Xn, un)
    report = solve_projection(system, cfg.solver_epoch)
    H, n = params.W.shape
    dW = system.block(report.x, "dW").reshape(H, n)
    dd = system.block(report.x, "dd")

    start_metric = mse0 if cfg.line_search.criterion is Criterion.MSE else None
    outcome = line_search(params, dW, dd, Xn, un, cfg.line_search, cfg.solver_linesearch,
                          start_metric=start_metric, start_residual=s_res)
    new = outcome.best_params
    _, mse, max_abs = residuals(new, Xn, un)
    if not np.isfinite(mse):
        raise NumericalError(f"epoch {epoch}: non-finite training error after update")
    step_len = outcome.best_step * float(np.sqrt(np.sum(dW * dW) + np.sum(dd * dd)))
    record = EpochRecord(epoch, mse, max_abs, step_len, outcome.s_residual,
                         StopReason.ZERO_STEP if outcome.zero_step_chosen else None)
    return new, record


def _stop_reason(record: EpochRecord, prev_mse: float, cfg: TrainConfig) -> Optional[StopReason]:
    if record.stop_reason is StopReason.ZERO_STEP:
        return StopReason.ZERO_STEP
    if cfg.target_mse is not None and record.mse <= cfg.target_mse:
        return StopReason.TARGET_REACHED
    if record.epoch > 0 and prev_mse - record.mse < cfg.min_mse_delta:
        return StopReason.MIN_DELTA
    if record.epoch >= cfg.max_epochs:
        return StopReason.MAX_EPOCHS
    return None


def train_normalized(Xn, un, cfg: TrainConfig, params: Optional[MlpParams] = None,
                     callback: Optional[Callable[[EpochRecord], None]] = None
                     ) -> Tuple[MlpParams, List[EpochRecord]]:
    """Train on already normalized data.

    ``params`` overrides the seeded initialization (its output layer is
    re-fitted).  Record 0 describes the initial fit; records 1.. the epochs.
    """
    Xn = np.asarray(Xn, dtype=np.float64)
    un = np.asarray(un, dtype=np.float64).reshape(-1)
    if params is None:
        params = init_params(Xn.shape[1], cfg)
    elif params.n_inputs != Xn.shape[1]:
        raise ContractError(f"params expect n={params.n_inputs}, data has {Xn.shape[1]} inputs")
    fitted, s_res = fit_output_layer(params, Xn, un, cfg.solver_epoch, warm=False)
    _, mse_f, _ = residuals(fitted, Xn, un)
    _, mse_p, _ = residuals(params, Xn, un)
    if mse_f <= mse_p or not np.isfinite(mse_p):
        params = fitted
    _, mse, max_abs = residuals(params, Xn, un)
    if not np.isfinite(mse):
        raise NumericalError("non-finite training error after the initial fit")

    record = EpochRecord(0, mse, max_abs, 0.0, s_res)
    reason = _stop_reason(record, np.inf, cfg)
    records = [EpochRecord(0, mse, max_abs, 0.0, s_res, reason)]
    if callback:
        callback(records[-1])
    epoch = 0
    while reason is None:
        epoch += 1
        prev_mse = records[-1].mse
        params, record = train_epoch(params, Xn, un, cfg, epoch)
        reason = _stop_reason(record, prev_mse, cfg)
        record = EpochRecord(record.epoch, record.mse, record.max_abs_err, record.step_len,
                             record.s_residual, reason)
        records.append(record)
        if callback:
            callback(record)
        log.debug("epoch %d mse %.6e step %.3e", epoch, record.mse, record.step_len)
    return params, records


def train(ds: Dataset, cfg: TrainConfig,
          callback: Optional[Callable[[EpochRecord], None]] = None
          ) -> Tuple[MlpParams, List[EpochRecord], NormalizationSpec]:
    """Normalize ``ds``, initialize and train.

    Returns the parameters (acting on normalized data), the per-epoch curve
    and the normalization needed to map predictions back to problem units.
    """
    Xn, un, norm = normalize(ds)
    params, records = train_normalized(Xn, un, cfg, callback=callback)
    return params, records, norm


def predict(params: MlpParams, X, norm: NormalizationSpec) -> np.ndarray:
    """Predictions in problem units for raw inputs ``X``."""
    from .network import forward
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != params.n_inputs:
        raise ContractError(f"model expects n={params.n_inputs} inputs, data has {X.shape[1]}")
    return norm.denormalize_targets(forward(params, norm.normalize_inputs(X)))


def evaluate(params: MlpParams, ds: Dataset, norm: NormalizationSpec) -> dict:
    """Training-style metrics on ``ds`` in normalized and problem units."""
    if ds.n_inputs != params.n_inputs:
        raise ContractError(f"model expects n={params.n_inputs} inputs, data has {ds.n_inputs}")
    Xn = norm.normalize_inputs(ds.X)
    un = norm.normalize_targets(ds.u)
    _, mse_n, max_n = residuals(params, Xn, un)
    raw = ds.u - predict(params, ds.X, norm)
    return {"mse": mse_n, "max_abs": max_n, "mse_raw": float(np.mean(raw * raw)),
            "max_abs_raw": float(np.max(np.abs(raw)))}
