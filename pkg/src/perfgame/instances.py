"""Ready-made games: small hand-checkable ones and seeded random families."""

from __future__ import annotations

import numpy as np

from .distributions import Deterministic, FeatureBase, Gaussian
from .game import GameDims, GameInstance, compute_constants
from .losses import QuadraticCustom, Revenue, StrategicPrediction
from .sets import Box, WholeSpace


def scalar_duopoly(mu=1.0, a=-1.0, b=0.5, lam=2.0, scale=1.0, noise_std=0.0, feasible=None):
    """Two symmetric scalar revenue players with ``z_i = zeta_i + a x_i + b x_{-i}``.

    With the defaults: x_ne = (2/7, 2/7), x_ps = (0.4, 0.4), x_so = (1/3, 1/3).
    """
    dims = GameDims((1, 1), (1, 1))
    if noise_std > 0:
        bases = [Gaussian([mu], [[noise_std**2]]) for _ in range(2)]
    else:
        bases = [Deterministic([mu]) for _ in range(2)]
    sets = feasible if feasible is not None else [WholeSpace(1), WholeSpace(1)]
    return GameInstance(
        dims,
        sets,
        bases,
        [[[a]], [[a]]],
        [[[b]], [[b]]],
        [Revenue(lam, scale), Revenue(lam, scale)],
    )


def scalar_monopoly(mu=1.0, a=-1.0, lam=2.0, scale=1.0, noise_std=0.0):
    dims = GameDims((1,), (1,))
    base = Gaussian([mu], [[noise_std**2]]) if noise_std > 0 else Deterministic([mu])
    return GameInstance(dims, [WholeSpace(1)], [base], [[[a]]], [np.zeros((1, 0))], [Revenue(lam, scale)])


def revenue_game(A_own, A_other, lam, mu, cov=None, scale=1.0, feasible=None):
    """Multi-location revenue game; one entry per player in every list argument."""
    n = len(A_own)
    d_i = [np.atleast_2d(A).shape[1] for A in A_own]
    dims = GameDims(d_i, d_i)
    bases = []
    for i in range(n):
        if cov is None or cov[i] is None:
            bases.append(Deterministic(mu[i]))
        else:
            bases.append(Gaussian(mu[i], cov[i]))
    sets = feasible if feasible is not None else [WholeSpace(k) for k in d_i]
    lams = lam if np.ndim(lam) else [lam] * n
    return GameInstance(dims, sets, bases, A_own, A_other, [Revenue(l, scale) for l in lams])


def step_decay_instance():
    """Revenue game whose constants are alpha=1, L=2, rho=0.25, sigma=1 exactly."""
    g = 0.125  # own and cross effect, so |A_bar_i| = 0.125*sqrt(2) = 0.25/sqrt(2)
    return revenue_game(
        A_own=[[[-g]], [[-g]]],
        A_other=[[[g]], [[g]]],
        lam=[1.0, 2.0],
        mu=[[1.0], [1.0]],
        cov=[[[0.5]], [[0.5]]],
    )


def _rand_spd(rng, k, lo=0.5, hi=2.0):
    Q, _ = np.linalg.qr(rng.standard_normal((k, k)))
    return (Q * rng.uniform(lo, hi, k)) @ Q.T


def random_affine_instance(rng, rho_target=None, rho_max=0.95, n=None, constrained=False):
    """Random game with coupled quadratic losses and Gaussian location families.

    The performative matrices are rescaled afterwards so that rho equals
    ``rho_target`` (drawn uniformly from (0.05, rho_max) when omitted).
    """
    n = n if n is not None else int(rng.integers(1, 4))
    d_i = rng.integers(1, 4, size=n)
    m_i = rng.integers(1, 4, size=n)
    dims = GameDims(d_i, m_i)
    d = dims.d

    # own blocks SPD, cross coupling small enough to keep the static game monotone
    xx = []
    for i in range(n):
        row = np.zeros((d_i[i], d))
        row[:, dims.slices[i]] = _rand_spd(rng, d_i[i])
        row[:, dims.other_index(i)] = 0.15 * rng.standard_normal((d_i[i], d - d_i[i]))
        xx.append(row)
    J = np.vstack(xx)
    if np.linalg.eigvalsh(0.5 * (J + J.T))[0] <= 0.1:
        for i in range(n):
            xx[i][:, dims.other_index(i)] = 0.0

    losses, bases, A_own, A_other = [], [], [], []
    for i in range(n):
        mi = m_i[i]
        zz = rng.standard_normal((mi, mi))
        losses.append(
            QuadraticCustom(
                xx=xx[i],
                xz=rng.standard_normal((d_i[i], mi)),
                zz=zz @ zz.T / mi,
                x_lin=rng.standard_normal(d_i[i]),
                z_lin=rng.standard_normal(mi),
            )
        )
        L = rng.standard_normal((mi, mi)) * 0.3
        bases.append(Gaussian(rng.standard_normal(mi), L @ L.T))
        A_own.append(rng.standard_normal((mi, d_i[i])))
        A_other.append(rng.standard_normal((mi, d - d_i[i])))

    if constrained:
        sets = [Box(-np.full(k, 1.5), np.full(k, 1.5)) for k in d_i]
    else:
        sets = [WholeSpace(int(k)) for k in d_i]

    game = GameInstance(dims, sets, bases, A_own, A_other, losses)
    rho0 = compute_constants(game).rho
    if rho_target is None:
        rho_target = rng.uniform(0.05, rho_max)
    if rho0 == 0:
        return game
    s = rho_target / rho0
    return GameInstance(dims, sets, bases, [s * A for A in A_own], [s * A for A in A_other], losses)


def random_strategic_instance(
    rng, n=2, d=2, m=10, n_features=50, rho_target=None, cross_ratio=0.3, noise_std=0.5
):
    """Strategic-prediction game built to pass the monotonicity certificate.

    Own effects ``A_i`` have orthogonal columns with singular values in
    [1, 1.5]; cross effects are scaled so that the spectral gap stays
    positive, then everything is rescaled to hit ``rho_target`` (< 1/2).
    """
    dims = GameDims([d] * n, [m] * n)
    bases, A_own, A_other, losses = [], [], [], []
    for i in range(n):
        thetas = rng.standard_normal((n_features, d, m)) / np.sqrt(m)
        offsets = rng.standard_normal((n_features, m))
        bases.append(FeatureBase(thetas, offsets, noise_std))
        Q, _ = np.linalg.qr(rng.standard_normal((m, d)))
        A_own.append(Q * rng.uniform(1.0, 1.5, d))
        C = rng.standard_normal((m, (n - 1) * d))
        C *= cross_ratio / (max(1.0, np.sqrt(n - 1)) * np.linalg.norm(C, 2) * 1.5)
        A_other.append(C)
        losses.append(StrategicPrediction())
    sets = [WholeSpace(d) for _ in range(n)]
    game = GameInstance(dims, sets, bases, A_own, A_other, losses)
    rho0 = compute_constants(game).rho
    if rho_target is None:
        rho_target = rng.uniform(0.02, 0.45)
    s = rho_target / rho0
    return GameInstance(dims, sets, bases, [s * A for A in A_own], [s * A for A in A_other], losses)


def adaptive_benchmark_instance(seed=7):
    """Certified two-player strategic game with d_i=2, m_i=10 used for rate studies."""
    return random_strategic_instance(np.random.default_rng(seed), n=2, d=2, m=10, rho_target=0.3)
