"""How much do platforms lose by ignoring their own (or everyone's) price effects?"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..losses import Revenue

MYOPIC, PARTIAL, FULL = "Myopic", "PartiallyMyopic", "Full"
MODES = (MYOPIC, PARTIAL, FULL)


def myopic_gradient(mode, x_i, x_o, zeta_i, A_own, A_other, lam):
    """Gradient estimate a platform uses under ``mode`` (rows broadcast)."""
    x_i = np.asarray(x_i, dtype=float)
    zeta_i = np.asarray(zeta_i, dtype=float)
    if mode == MYOPIC:
        return lam * x_i - 0.5 * zeta_i
    A_own = np.atleast_2d(np.asarray(A_own, dtype=float))
    # -(A - lam I)' x, written row-wise
    g = -np.einsum("...j,ji->...i", x_i, A_own - lam * np.eye(A_own.shape[0]))
    if mode == PARTIAL:
        return g - 0.5 * zeta_i
    if mode == FULL:
        cross = np.einsum("ij,...j->...i", np.asarray(A_other, dtype=float), np.asarray(x_o, dtype=float))
        return g - 0.5 * (zeta_i + cross)
    raise ValueError(f"unknown mode {mode!r}; choose from {MODES}")


@dataclass
class MyopicOutcome:
    modes: tuple
    price: list  # per player, (m,) seed-averaged final price
    demand: list
    revenue: list  # per location
    total_revenue: list

    def to_dict(self):
        return {
            "modes": list(self.modes),
            "price": [np.asarray(v).tolist() for v in self.price],
            "demand": [np.asarray(v).tolist() for v in self.demand],
            "revenue": [np.asarray(v).tolist() for v in self.revenue],
            "total_revenue": [float(v) for v in self.total_revenue],
        }


@dataclass
class MyopicStudy:
    outcome: MyopicOutcome
    baseline: MyopicOutcome  # everyone Full, same seeds
    delta_price: list
    delta_demand: list
    delta_revenue: list
    delta_total_revenue: list

    def to_dict(self):
        return {
            "outcome": self.outcome.to_dict(),
            "baseline": self.baseline.to_dict(),
            "delta_price": [np.asarray(v).tolist() for v in self.delta_price],
            "delta_demand": [np.asarray(v).tolist() for v in self.delta_demand],
            "delta_revenue": [np.asarray(v).tolist() for v in self.delta_revenue],
            "delta_total_revenue": [float(v) for v in self.delta_total_revenue],
        }


def _check_game(game):
    for i, loss in enumerate(game.losses):
        if not isinstance(loss, Revenue) or loss.scale != 0.5:
            raise ValueError(f"player {i}: myopic study needs a revenue loss with scale 1/2")


def simulate_modes(game, modes, eta, iterations, seeds, x0=None, chunk=512):
    """Stochastic gradient play with mode-specific gradient estimates.

    Returns final prices, shape ``(len(seeds), d)``, seeds in sorted order.
    """
    _check_game(game)
    n, d = game.dims.n, game.dims.d
    if len(modes) != n:
        raise ValueError(f"need one mode per player ({n})")
    for mo in modes:
        if mo not in MODES:
            raise ValueError(f"unknown mode {mo!r}; choose from {MODES}")
    seeds = sorted(int(s) for s in seeds)
    rngs = [np.random.default_rng(s) for s in seeds]
    X = np.zeros((len(seeds), d)) if x0 is None else np.broadcast_to(np.asarray(x0, float), (len(seeds), d)).copy()
    X = game.project(X)
    lams = [loss.lam for loss in game.losses]
    done = 0
    while done < iterations:
        c = min(chunk, iterations - done)
        per_seed = [game.draw_base(r, c) for r in rngs]
        zetas = [np.stack([ps[i][0] for ps in per_seed]) for i in range(n)]  # (S, c, m_i)
        for k in range(c):
            G = np.empty_like(X)
            for i in range(n):
                sl = game.dims.slices[i]
                G[:, sl] = myopic_gradient(
                    modes[i], X[:, sl], X[:, game.dims.other_index(i)], zetas[i][:, k],
                    game.A_own[i], game.A_other[i], lams[i],
                )
            X = game.project(X - eta * G)
        done += c
    return X


def _outcome(game, modes, finals):
    price, demand, revenue, total = [], [], [], []
    for i in range(game.dims.n):
        sl = game.dims.slices[i]
        x_i = finals[:, sl]
        dem = game.bases[i].mean + np.einsum("ij,sj->si", game.A_bar[i], finals)
        rev = x_i * dem
        price.append(x_i.mean(axis=0))
        demand.append(dem.mean(axis=0))
        revenue.append(rev.mean(axis=0))
        total.append(float(rev.sum(axis=1).mean()))
    return MyopicOutcome(tuple(modes), price, demand, revenue, total)


def myopic_study(game, modes, eta=0.01, iterations=5000, seeds=(0,), x0=None):
    """Run ``modes`` and the all-Full baseline on the same seeds and report the differences."""
    if hasattr(game, "game"):  # RideShareInstance
        game = game.game
    modes = tuple(modes)
    out = _outcome(game, modes, simulate_modes(game, modes, eta, iterations, seeds, x0))
    full = (FULL,) * game.dims.n
    if modes == full:
        base = out
    else:
        base = _outcome(game, full, simulate_modes(game, full, eta, iterations, seeds, x0))
    n = game.dims.n
    return MyopicStudy(
        out,
        base,
        [out.price[i] - base.price[i] for i in range(n)],
        [out.demand[i] - base.demand[i] for i in range(n)],
        [out.revenue[i] - base.revenue[i] for i in range(n)],
        [out.total_revenue[i] - base.total_revenue[i] for i in range(n)],
    )
