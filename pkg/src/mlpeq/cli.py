"""Command-line front end: ``gen``, ``train``, ``eval`` and ``predict``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np

from . import persistence
from .data import DataError, format_float, load_csv, normalize, sample_schwefel, save_csv
from .network import ContractError
from .persistence import FormatError
from .systems import build_increment_system, build_s_system, save_system_csv
from .training import NumericalError, TrainConfig, evaluate, fit_output_layer, init_params, predict, train

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive(kind):
    def parse(text):
        value = kind(text)
        if value < 1:
            raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
        return value
    return parse


def _nonneg_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mlpeq", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log every epoch")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="sample the Schwefel function into a dataset CSV")
    p.add_argument("--points", type=_positive(int), required=True)
    p.add_argument("--dim", type=_positive(int), default=3)
    p.add_argument("--lo", type=float, default=-500.0)
    p.add_argument("--hi", type=float, default=500.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train", help="train a network on a dataset CSV")
    p.add_argument("--data", help="dataset CSV (may also come from the config file)")
    p.add_argument("--config", help="JSON run config; flags override its values")
    p.add_argument("--hidden", type=_positive(int))
    p.add_argument("--epochs", type=_nonneg_int)
    p.add_argument("--seed", type=int)
    p.add_argument("--init-scale", type=float)
    p.add_argument("--min-delta", type=float)
    p.add_argument("--target-mse", type=float)
    p.add_argument("--samples", type=_positive(int), help="line-search samples per epoch")
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--curve", help="training curve CSV to write")
    p.add_argument("--dump-systems", metavar="DIR",
                   help="write the initial output-layer and increment systems as CSV")

    for name, text in (("eval", "report errors of a model on a dataset CSV"),
                       ("predict", "predict targets for the input rows of a CSV")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--model", required=True)
        p.add_argument("--data", required=True)
        if name == "predict":
            p.add_argument("--out", help="prediction CSV (default: stdout)")
    return parser


def cmd_gen(args) -> int:
    if not args.lo < args.hi:
        raise UsageError(f"--lo must be below --hi (got {args.lo}, {args.hi})")
    ds = sample_schwefel(args.points, args.dim, args.lo, args.hi, args.seed)
    save_csv(ds, args.out)
    print(f"N={ds.n_points} n={ds.n_inputs} u_min={format_float(ds.u.min())} "
          f"u_max={format_float(ds.u.max())}")
    return 0


def _train_config(args):
    cfg, extra = (persistence.load_run_config(args.config) if args.config
                  else (TrainConfig(), {}))
    overrides = {"hidden_units": args.hidden, "max_epochs": args.epochs, "seed": args.seed,
                 "init_scale": args.init_scale, "min_mse_delta": args.min_delta,
                 "target_mse": args.target_mse}
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if args.samples is not None:
        overrides["line_search"] = dataclasses.replace(cfg.line_search, n_samples=args.samples)
    try:
        cfg = dataclasses.replace(cfg, **overrides)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    data = args.data or extra.get("data")
    if not data:
        raise UsageError("no dataset given (--data or 'data' in the config file)")
    return cfg, data


def cmd_train(args) -> int:
    cfg, data = _train_config(args)
    ds = load_csv(data)
    if args.dump_systems:
        out = Path(args.dump_systems)
        out.mkdir(parents=True, exist_ok=True)
        Xn, un, _ = normalize(ds)
        params, _ = fit_output_layer(init_params(ds.n_inputs, cfg), Xn, un, cfg.solver_epoch)
        save_system_csv(build_s_system(params, Xn, un), out / "s_system.csv")
        save_system_csv(build_increment_system(params, Xn, un), out / "increment_system.csv")
    log = logging.getLogger("mlpeq")
    params, records, norm = train(
        ds, cfg, callback=lambda r: log.info("epoch %d mse %.6e", r.epoch, r.mse))
    provenance = {"config_hash": persistence.config_hash(cfg), "seed": cfg.seed,
                  "config": persistence.config_to_dict(cfg)}
    persistence.save_model(args.out, params, norm, provenance)
    if args.curve:
        persistence.save_curve(args.curve, records)
    last = records[-1]
    print(f"epochs={last.epoch} mse={format_float(last.mse)} stop_reason={last.stop_reason.value}")
    return 0


def _read_inputs(path, n):
    """Input rows for prediction: ``n`` columns, or a dataset CSV with a trailing ``u``."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    if header[-1] == "u":
        X = load_csv(path).X
        if X.shape[1] != n:
            raise DataError(f"{path} has {X.shape[1]} input columns, model expects n={n}")
        return X
    if len(header) != n:
        raise DataError(f"{path} has {len(header)} input columns, model expects n={n}")
    try:
        X = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None
    if X.size == 0:
        raise DataError(f"{path}: no data rows")
    return X


def cmd_eval(args) -> int:
    params, norm, _ = persistence.load_model(args.model)
    ds = load_csv(args.data)
    if ds.n_inputs != params.n_inputs:
        raise DataError(f"model expects n={params.n_inputs} inputs, {args.data} has "
                        f"{ds.n_inputs}")
    m = evaluate(params, ds, norm)
    print(f"mse={format_float(m['mse'])} mse_raw={format_float(m['mse_raw'])} "
          f"max_abs_raw={format_float(m['max_abs_raw'])}")
    return 0


def cmd_predict(args) -> int:
    params, norm, _ = persistence.load_model(args.model)
    X = _read_inputs(args.data, params.n_inputs)
    text = "u\n" + "".join(format_float(v) + "\n" for v in predict(params, X, norm))
    if args.out:
        persistence.write_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


COMMANDS = {"gen": cmd_gen, "train": cmd_train, "eval": cmd_eval, "predict": cmd_predict}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"mlpeq {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, FormatError, ContractError, OSError) as exc:
        print(f"mlpeq {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, FloatingPointError) as exc:
        print(f"mlpeq {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
