"""
Two competing sellers, three kinds of equilibrium
==================================================

Each seller sets a price x_i and sees demand z_i = mu + a x_i + b x_j + noise.
Retraining-style methods settle at the stable point, gradient play with the
own-effect correction settles at the Nash point, and a planner would pick
the social optimum. Run top to bottom, or cell by cell in an editor.
"""

# %%
import numpy as np

from perfgame.game import compute_constants
from perfgame.instances import scalar_duopoly
from perfgame.oracles import certify_monotone, solve
from perfgame.solvers import SolverConfig, run_solver

game = scalar_duopoly(noise_std=0.5)
print(compute_constants(game))

# %% closed-form points
for kind in ("nash", "perf_stable", "social_opt"):
    rep = solve(game, kind)
    print(f"{kind:12s} {rep.point}  social cost {game.social_cost(rep.point):.5f}")

print(certify_monotone(game).to_dict())

# %% the stochastic methods find different points
ps = solve(game, "perf_stable").point
ne = solve(game, "nash").point
rsgm = run_solver(game, SolverConfig("rsgm", step_size=0.01, iterations=20_000), seeds=range(20), reference=ps)
sgm = run_solver(game, SolverConfig("sgm", step_size=0.01, iterations=20_000), seeds=range(20), reference=ne)

print("rsgm mean final", np.mean([t.final for t in rsgm], axis=0), "target", ps)
print("sgm  mean final", np.mean([t.final for t in sgm], axis=0), "target", ne)

# %% squared error along the way (every 2000 steps)
err = np.mean([t.error_sq for t in rsgm], axis=0)
print(err[::2000])
