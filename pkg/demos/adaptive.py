"""
Learning the performative effects on the fly
============================================

The adaptive method probes the market with small random perturbations, fits
the shift matrices by online least squares, and plugs the estimate into the
gradient. Error should fall like 1/t.
"""

# %%
import numpy as np

from perfgame.instances import adaptive_benchmark_instance
from perfgame.oracles import solve_nash
from perfgame.solvers import SolverConfig, run_solver

game = adaptive_benchmark_instance()
ne = solve_nash(game).point
trs = run_solver(game, SolverConfig("agm", iterations=10_000, record_losses=False), seeds=range(20), reference=ne)

# %%
t = np.arange(1, 10_001)
err = np.mean([tr.error_sq for tr in trs], axis=0)
est = np.mean([tr.extra["est_error_sq"] for tr in trs], axis=0)
Z, q0 = float(trs[0].extra["Z"]), float(trs[0].extra["q0"])
win = t >= 100
print("log-log slope of the error:", np.polyfit(np.log(t[win]), np.log(err[win]), 1)[0])
print("worst estimate / envelope:", np.max(est / (Z / (t + q0))))

# %% plot if matplotlib is around
try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.loglog(t, err, label="E|x - x_ne|^2")
    ax.loglog(t, est, label="E|A_hat - A|_F^2")
    ax.loglog(t, Z / (t + q0), "k--", lw=0.8, label="Z/(t+q0)")
    ax.set_xlabel("iteration")
    ax.legend()
    fig.tight_layout()
    fig.savefig("adaptive_rate.png", dpi=120)
