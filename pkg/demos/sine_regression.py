"""Fit u = sin(x) on [-pi, pi] with a 20-unit network.

Prints the error curve every 25 epochs and the worst prediction error in
problem units at the end.
"""
import time

import numpy as np

from mlpeq.data import Dataset
from mlpeq.training import TrainConfig, evaluate, train

x = np.linspace(-np.pi, np.pi, 200)
ds = Dataset(x[:, None], np.sin(x))
cfg = TrainConfig(hidden_units=20, max_epochs=300, seed=0)

start = time.perf_counter()
params, curve, norm = train(ds, cfg)
for rec in curve[::25] + ([curve[-1]] if curve[-1].epoch % 25 else []):
    print(f"epoch {rec.epoch:4d}  mse {rec.mse:.3e}  step {rec.step_len:.2e}")
print(f"stopped: {curve[-1].stop_reason.value} after {time.perf_counter() - start:.1f}s")

metrics = evaluate(params, ds, norm)
print(f"max |sin(x) - prediction| = {metrics['max_abs_raw']:.2e}")
