"""Model files, run-config files and training-curve CSV."""
from __future__ import annotations

import dataclasses
import enum
import hashlib
import json
import os
from pathlib import Path
from typing import Iterable, List, Optional, Tuple

import numpy as np

from .data import NormalizationSpec, format_float
from .linesearch import LineSearchConfig
from .network import ActivationKind, MlpParams
from .solvers import ProjectionConfig
from .training import EpochRecord, StopReason, TrainConfig

SCHEMA_VERSION = 1
CURVE_HEADER = "epoch,mse,max_abs_err,step_len,s_residual,stop_reason"


class FormatError(ValueError):
    """A model, config or curve file does not follow its schema."""


def write_atomic(path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


# -- configuration -----------------------------------------------------------

_NESTED = {"line_search": LineSearchConfig, "solver_epoch": ProjectionConfig,
           "solver_linesearch": ProjectionConfig}


def _plain(value):
    if isinstance(value, enum.Enum):
        return value.value
    if dataclasses.is_dataclass(value):
        return {f.name: _plain(getattr(value, f.name)) for f in dataclasses.fields(value)}
    return value


def config_to_dict(cfg: TrainConfig) -> dict:
    return _plain(cfg)


def _build(cls, data: dict, where: str, base=None):
    if not isinstance(data, dict):
        raise FormatError(f"{where}: expected an object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise FormatError(f"{where}: unknown key(s) {', '.join(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if cls is TrainConfig and key in _NESTED:
            value = _build(_NESTED[key], value, f"{where}.{key}", getattr(base, key, None))
        kwargs[key] = value
    try:
        return dataclasses.replace(base, **kwargs) if base is not None else cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{where}: {exc}") from None


def config_from_dict(data: dict, base: Optional[TrainConfig] = None) -> TrainConfig:
    """Build a :class:`TrainConfig`; keys absent from ``data`` keep the values of ``base``."""
    return _build(TrainConfig, data, "config", base or TrainConfig())


def config_hash(cfg: TrainConfig) -> str:
    text = json.dumps(config_to_dict(cfg), sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()


def load_run_config(path) -> Tuple[TrainConfig, dict]:
    """Read a JSON run config.

    Top-level keys are :class:`TrainConfig` fields plus ``data`` (dataset
    path).  Returns the config and a dict of the non-config entries.
    """
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise FormatError(f"{path}: expected a JSON object")
    extra = {k: raw.pop(k) for k in ("data",) if k in raw}
    return config_from_dict(raw), extra


# -- model files ---------------------------------------------------------------

def model_to_text(params: MlpParams, norm: NormalizationSpec,
                  provenance: Optional[dict] = None) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "n": params.n_inputs,
        "H": params.n_hidden,
        "activation": params.activation.value,
        "W": params.W.tolist(),
        "d": params.d.tolist(),
        "s_hat": params.s_hat.tolist(),
        "b": params.b,
        "normalization": {"in_lo": norm.in_lo.tolist(), "in_hi": norm.in_hi.tolist(),
                          "out_lo": norm.out_lo, "out_hi": norm.out_hi},
        "provenance": provenance or {},
    }
    return json.dumps(doc, indent=1) + "\n"


def save_model(path, params: MlpParams, norm: NormalizationSpec,
               provenance: Optional[dict] = None) -> None:
    write_atomic(path, model_to_text(params, norm, provenance))


def load_model(path) -> Tuple[MlpParams, NormalizationSpec, dict]:
    """Read a model file; returns ``(params, normalization, provenance)``."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from None
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise FormatError(f"{path}: unsupported schema_version {doc.get('schema_version')!r}")
    try:
        params = MlpParams(np.array(doc["W"], dtype=np.float64).reshape(doc["H"], doc["n"]),
                           doc["d"], doc["s_hat"], doc["b"], ActivationKind(doc["activation"]))
        nd = doc["normalization"]
        norm = NormalizationSpec(nd["in_lo"], nd["in_hi"], nd["out_lo"], nd["out_hi"])
    except (KeyError, ValueError, TypeError) as exc:
        raise FormatError(f"{path}: malformed model ({exc})") from None
    if norm.in_lo.size != params.n_inputs:
        raise FormatError(f"{path}: normalization covers {norm.in_lo.size} inputs, model has "
                          f"{params.n_inputs}")
    return params, norm, doc.get("provenance", {})


# -- training curve ------------------------------------------------------------

def curve_to_text(records: Iterable[EpochRecord]) -> str:
    lines = [CURVE_HEADER]
    for r in records:
        reason = r.stop_reason.value if r.stop_reason is not None else ""
        lines.append(",".join([str(r.epoch), format_float(r.mse), format_float(r.max_abs_err),
                               format_float(r.step_len), format_float(r.s_residual), reason]))
    return "\n".join(lines) + "\n"


def save_curve(path, records: Iterable[EpochRecord]) -> None:
    write_atomic(path, curve_to_text(records))


def load_curve(path) -> List[EpochRecord]:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != CURVE_HEADER:
        raise FormatError(f"{path}: missing curve header")
    out = []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != 6:
            raise FormatError(f"{path}: line {lineno}: expected 6 columns")
        reason = StopReason(cells[5]) if cells[5] else None
        out.append(EpochRecord(int(cells[0]), *(float(c) for c in cells[1:5]), reason))
    return out
