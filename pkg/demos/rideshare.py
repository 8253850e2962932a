"""
Synthetic ride-share market
===========================

Two platforms price rides at four locations. We look at how much revenue the
equilibria leave on the table relative to the social optimum, and what happens
when a platform ignores its own price effect.
"""

# %%
import json

import numpy as np

from perfgame.harness import FULL, MYOPIC, PARTIAL, efficiency_report, gen_rideshare, myopic_study

inst = gen_rideshare(4, 10, [120, 90, 60, 150], seed=2024)
print(np.diag(inst.A_own[0]), np.diag(inst.A_other[0]))

# %% efficiency
rep = efficiency_report(inst.game, n_mc=100_000, seed=0)
print("S_so", rep.S_so, "S_ne", rep.S_ne, "S_ps", rep.S_ps)
print("PoA(ne) %.4f  PoA(ps) %.4f" % (rep.poa_ne, rep.poa_ps))
print("empirical", rep.poa_ne_empirical, rep.poa_ps_empirical, rep.within_se())

# %% prices at each point
for kind in ("so", "ne", "ps"):
    print(kind, [np.round(r["price"], 2) for r in rep.players[kind]])

# %% myopic platforms (a small step; elasticities are large here)
for modes in [(MYOPIC, FULL), (PARTIAL, FULL), (MYOPIC, MYOPIC)]:
    st = myopic_study(inst, modes, eta=0.01, iterations=3000, seeds=range(5))
    print(modes, "revenue change per platform:", np.round(st.delta_total_revenue, 2))

# %%
print(json.dumps(rep.to_dict()["poa_ne"]))
