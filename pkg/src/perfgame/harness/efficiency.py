"""Social cost and price of anarchy at the three reference points."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..losses import Revenue
from ..oracles import solve_nash, solve_perf_stable, solve_social_opt

POINTS = ("so", "ne", "ps")


def _r(v, digits=12):
    # 12 significant digits keeps report bytes stable under last-ulp BLAS noise
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_r(u, digits) for u in np.asarray(v, dtype=float).tolist()]
    v = float(v)
    if not np.isfinite(v):
        return None
    return float(f"{v:.{digits}g}")


@dataclass
class EfficiencyReport:
    S_so: float
    S_ne: float
    S_ps: float
    poa_ne: float
    poa_ps: float
    points: dict  # kind -> equilibrium point
    empirical: dict  # kind -> {"mean": ..., "se": ...}
    poa_ne_empirical: float
    poa_ps_empirical: float
    players: dict = field(default_factory=dict)  # kind -> list of per-player dicts
    n_mc: int = 0
    seed: int = 0

    def within_se(self, k=3.0):
        """Empirical social cost within ``k`` standard errors of the closed form, per point."""
        out = {}
        for kind in POINTS:
            e = self.empirical[kind]
            exact = getattr(self, f"S_{kind}")
            out[kind] = bool(abs(e["mean"] - exact) <= k * e["se"] + 1e-12 * max(1.0, abs(exact)))
        return out

    def to_dict(self):
        return {
            "S_so": _r(self.S_so),
            "S_ne": _r(self.S_ne),
            "S_ps": _r(self.S_ps),
            "poa_ne": _r(self.poa_ne),
            "poa_ps": _r(self.poa_ps),
            "poa_ne_empirical": _r(self.poa_ne_empirical),
            "poa_ps_empirical": _r(self.poa_ps_empirical),
            "points": {k: _r(v) for k, v in self.points.items()},
            "empirical": {k: {"mean": _r(v["mean"]), "se": _r(v["se"])} for k, v in self.empirical.items()},
            "players": {
                k: [{key: _r(val) for key, val in p.items()} for p in plist] for k, plist in self.players.items()
            },
            "n_mc": self.n_mc,
            "seed": self.seed,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"


def _ratio(num, den):
    if den == 0:
        return 1.0 if num == 0 else float("inf")
    return num / den


def _player_rows(game, x, losses_at_x):
    rows = []
    for i in range(game.dims.n):
        sl = game.dims.slices[i]
        demand = game.bases[i].mean + game.A_bar[i] @ x
        row = {"loss": float(losses_at_x[i]), "price": x[sl], "demand": demand}
        if isinstance(game.losses[i], Revenue):
            # price times expected demand, without the loss scaling
            row["revenue"] = float(demand @ x[sl])
        rows.append(row)
    return rows


def sampled_social_costs(game, points, n_mc, rng, chunk=20_000):
    """Per-sample realized social cost at each point, common random numbers across points."""
    out = {k: [] for k in points}
    left = n_mc
    while left > 0:
        c = min(chunk, left)
        draws = game.draw_base(rng, c)
        for kind, x in points.items():
            tot = np.zeros(c)
            for i, (zeta, aux) in enumerate(draws):
                z = zeta + game.A_bar[i] @ x
                xi, xo = game.dims.block(x, i), game.dims.others(x, i)
                tot += game.losses[i].value(xi, xo, z, aux)
            out[kind].append(tot)
        left -= c
    return {k: np.concatenate(v) for k, v in out.items()}


def efficiency_report(game, n_mc=100_000, seed=0):
    """Closed-form and Monte-Carlo social costs at x^so, x^ne, x^ps.

    ``poa_*`` are ratios of closed-form expected social costs; the
    ``*_empirical`` ratios use sample means over ``n_mc`` shared draws.
    """
    pts = {
        "so": solve_social_opt(game).point,
        "ne": solve_nash(game).point,
        "ps": solve_perf_stable(game).point,
    }
    S = {k: float(game.social_cost(x)) for k, x in pts.items()}
    samples = sampled_social_costs(game, pts, n_mc, np.random.default_rng(seed))
    emp = {}
    for k, v in samples.items():
        emp[k] = {"mean": float(np.mean(v)), "se": float(np.std(v, ddof=1) / np.sqrt(v.size)) if v.size > 1 else 0.0}
    players = {k: _player_rows(game, x, game.expected_losses(x)) for k, x in pts.items()}
    return EfficiencyReport(
        S_so=S["so"],
        S_ne=S["ne"],
        S_ps=S["ps"],
        poa_ne=_ratio(S["ne"], S["so"]),
        poa_ps=_ratio(S["ps"], S["so"]),
        points=pts,
        empirical=emp,
        poa_ne_empirical=_ratio(emp["ne"]["mean"], emp["so"]["mean"]),
        poa_ps_empirical=_ratio(emp["ps"]["mean"], emp["so"]["mean"]),
        players=players,
        n_mc=int(n_mc),
        seed=int(seed),
    )
