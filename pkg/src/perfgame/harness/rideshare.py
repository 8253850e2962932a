"""Synthetic two-platform ride-share market.

Demand at each location is Poisson around a base level ``q``. Elasticities
follow the rule of thumb that a 50% price increase cuts demand by 75%:
``a_jj = -0.75 q_j / (0.5 p_j)``. The rival's price enters with the opposite
sign at ``cross_ratio * |a_jj|``. Locations are uncorrelated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..distributions import Empirical
from ..game import GameDims, GameInstance
from ..losses import Revenue
from ..sets import WholeSpace


@dataclass(eq=False)
class RideShareInstance:
    m: int
    price: np.ndarray  # (m,) nominal price bin per location
    demand: np.ndarray  # (2, m) base demand per platform
    A_own: tuple
    A_other: tuple
    lam: tuple
    cross_ratio: float
    seed: int
    game: GameInstance


def own_elasticity(q, p):
    return -0.75 * np.asarray(q, dtype=float) / (0.5 * np.asarray(p, dtype=float))


def gen_rideshare(m, p, q, seed=0, cross_ratio=0.5, lam=1.0, scale=0.5, n_samples=1000, players=2):
    """Build the market game.

    ``p`` is a scalar or per-location price; ``q`` a scalar, a per-location
    vector shared by both platforms, or a ``(players, m)`` array.
    """
    m = int(m)
    if m < 1:
        raise ValueError("need at least one location")
    p = np.broadcast_to(np.asarray(p, dtype=float), (m,)).copy()
    q = np.asarray(q, dtype=float)
    q = np.broadcast_to(q if q.ndim < 2 else q, (players, m)).copy()
    if np.any(p <= 0) or np.any(q <= 0):
        raise ValueError("prices and base demand must be positive")
    if cross_ratio < 0:
        raise ValueError("cross_ratio must be nonnegative")

    rng = np.random.default_rng(seed)
    bases, A_own, A_other = [], [], []
    for i in range(players):
        draws = rng.poisson(q[i], size=(n_samples, m)).astype(float)
        bases.append(Empirical(draws))
        a = own_elasticity(q[i], p)
        A_own.append(np.diag(a))
        # same cross effect from every rival platform
        A_other.append(np.tile(np.diag(cross_ratio * np.abs(a)), (1, players - 1)))
    lams = tuple(float(v) for v in np.broadcast_to(lam, (players,)))
    dims = GameDims([m] * players, [m] * players)
    game = GameInstance(
        dims,
        [WholeSpace(m) for _ in range(players)],
        bases,
        A_own,
        A_other,
        [Revenue(l, scale) for l in lams],
    )
    return RideShareInstance(m, p, q, tuple(A_own), tuple(A_other), lams, float(cross_ratio), int(seed), game)
