"""The two linear systems behind each epoch, and the projection solver.

Builds the output-layer system and the first-order increment system for a
small random network, solves them with the projection iteration and with the
dense reference solver, and compares residuals.  On ill-conditioned systems
the projection residual lags the reference after a fixed budget; training
only needs a useful increment direction, and the line search decides how far
to follow it.
"""
import numpy as np

from mlpeq.solvers import ProjectionConfig, solve_projection, solve_reference
from mlpeq.systems import build_increment_system, build_s_system
from mlpeq.training import TrainConfig, fit_output_layer, init_params

rng = np.random.default_rng(0)
Xn = rng.uniform(-1, 1, size=(300, 2))
un = np.tanh(2 * Xn[:, 0]) * np.cos(3 * Xn[:, 1])
params = init_params(2, TrainConfig(hidden_units=15, init_scale=2.0))

for name, system in (("output layer", build_s_system(params, Xn, un)),
                     ("increment", build_increment_system(
                         fit_output_layer(params, Xn, un)[0], Xn, un))):
    ref = solve_reference(system)
    rep = solve_projection(system, ProjectionConfig(max_sweeps=500))
    print(f"{name} system {system.A.shape}, cond {np.linalg.cond(system.A):.1e}")
    print(f"  reference residual  {np.linalg.norm(system.A @ ref - system.r):.6e}")
    print(f"  projection residual {rep.final_residual_norm:.6e} after {rep.sweeps_used} sweeps")
    print(f"  blocks: {[name for name, _, _ in system.col_layout]}")
