"""Recover a target produced by a small random network.

A 3-unit teacher labels 300 points in [-1, 1]^2.  The data are realizable
by construction, so a 10-unit student should drive the training error to
(almost) zero.  Each seed draws a fresh teacher and student.
"""
import numpy as np

from mlpeq.network import forward
from mlpeq.training import TrainConfig, init_params, train_normalized


def teacher_data(seed, n_points=300):
    rng = np.random.default_rng(1000 + seed)
    teacher = init_params(2, TrainConfig(hidden_units=3, seed=5000 + seed))
    teacher = teacher.with_output(rng.normal(size=3), rng.normal())
    X = rng.uniform(-1.0, 1.0, size=(n_points, 2))
    return X, forward(teacher, X)


if __name__ == "__main__":
    for seed in range(10):
        X, u = teacher_data(seed)
        cfg = TrainConfig(hidden_units=10, max_epochs=500, seed=seed, target_mse=1e-6)
        _, curve = train_normalized(X, u, cfg)
        last = curve[-1]
        print(f"seed {seed}: epochs {last.epoch:3d}  mse {last.mse:.2e}  "
              f"({last.stop_reason.value})")
