"""Full-scale Schwefel protocol: d=3, 5152 samples, 200 hidden units, 4000 epochs.

This is a long run (many hours on one core).  It goes through the command
line front end, so the dataset, model and curve end up as files that can be
inspected or plotted afterwards::

    python demos/full_protocol.py OUTDIR [--epochs 4000] [--init-scale 5]
"""
import argparse
from pathlib import Path

from mlpeq.cli import main

parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
parser.add_argument("outdir")
parser.add_argument("--epochs", default="4000")
parser.add_argument("--init-scale", default="5")
parser.add_argument("--seed", default="7")
args = parser.parse_args()

out = Path(args.outdir)
out.mkdir(parents=True, exist_ok=True)
data = str(out / "schwefel.csv")
main(["gen", "--points", "5152", "--dim", "3", "--lo", "-500", "--hi", "500",
      "--seed", "1", "--out", data])
raise SystemExit(main([
    "-v", "train", "--data", data, "--hidden", "200", "--epochs", args.epochs,
    "--seed", args.seed, "--init-scale", args.init_scale,
    "--out", str(out / "model.json"), "--curve", str(out / "curve.csv")]))
