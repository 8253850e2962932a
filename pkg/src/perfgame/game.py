"""Decision-dependent games with location-family data and quadratic losses.

The joint decision is a flat vector of length ``d``; ``GameDims`` knows where
each player's block lives. Every gradient map is affine in the decisions, so
``GameInstance`` precomputes the matrices once:

    G_y(x) = J x + B y + g0          (static game, data frozen at y)
    H_x(y) = Mh y + Nh x + h0        (performative correction)
    D(x)   = G_x(x) + H_x(x)

and all solvers/oracles evaluate these instead of re-deriving expectations.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass

import numpy as np

from .errors import AssumptionViolation
from .sets import ProductSet


@dataclass(frozen=True)
class GameDims:
    d_i: tuple
    m_i: tuple

    def __post_init__(self):
        d_i = tuple(int(v) for v in self.d_i)
        m_i = tuple(int(v) for v in self.m_i)
        if len(d_i) == 0 or len(d_i) != len(m_i):
            raise ValueError("need at least one player and matching d_i / m_i lists")
        if min(d_i) < 1 or min(m_i) < 1:
            raise ValueError("all block dimensions must be >= 1")
        object.__setattr__(self, "d_i", d_i)
        object.__setattr__(self, "m_i", m_i)
        off = np.concatenate([[0], np.cumsum(d_i)]).astype(int)
        d = int(off[-1])
        object.__setattr__(self, "_slices", tuple(slice(int(off[i]), int(off[i + 1])) for i in range(len(d_i))))
        object.__setattr__(
            self, "_others", tuple(np.r_[0 : sl.start, sl.stop : d] for sl in self._slices)
        )

    @property
    def n(self):
        return len(self.d_i)

    @property
    def d(self):
        return sum(self.d_i)

    @property
    def offsets(self):
        return tuple(int(v) for v in np.concatenate([[0], np.cumsum(self.d_i)]))

    @property
    def slices(self):
        return self._slices

    def other_index(self, i):
        """Column indices of ``x_{-i}`` inside the joint vector (player order kept)."""
        return self._others[i]

    def block(self, x, i):
        return np.asarray(x)[..., self.slices[i]]

    def others(self, x, i):
        return np.asarray(x)[..., self.other_index(i)]

    def assemble(self, i, x_i, x_o):
        """Inverse of ``(block, others)``: put ``x_i`` and ``x_{-i}`` back together."""
        x_i, x_o = np.asarray(x_i, dtype=float), np.asarray(x_o, dtype=float)
        shape = np.broadcast_shapes(x_i.shape[:-1], x_o.shape[:-1]) + (self.d,)
        out = np.empty(shape)
        out[..., self.slices[i]] = x_i
        out[..., self.other_index(i)] = x_o
        return out

    def check(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.d,):
            raise ValueError(f"decision vector must have trailing dimension {self.d}, got {x.shape}")
        return x


@dataclass(frozen=True)
class GameConstants:
    alpha: float
    beta: tuple
    gamma: tuple
    rho: float
    L: float
    alpha_i: tuple
    delta_lip: float
    sigma: float
    # not part of the classical list but needed by the Nash-seeking schedules
    rho_separable: float | None = None
    alpha_nash: float | None = None
    L_nash: float | None = None
    sigma_nash: float | None = None

    def rho_from_parts(self):
        return rho_formula(self.alpha, self.beta, self.gamma)


def rho_formula(alpha, beta, gamma):
    beta, gamma = np.asarray(beta, dtype=float), np.asarray(gamma, dtype=float)
    return float(np.sqrt(np.sum((beta * gamma / alpha) ** 2)))


@dataclass(frozen=True)
class _AtomTerms:
    """Per-atom affine description of a stochastic direction for one player.

    Under the atom the direction equals ``F x + f + N (zeta - zeta_mean)``.
    """

    weight: float
    F: np.ndarray
    f: np.ndarray
    N: np.ndarray
    cov: np.ndarray


class GameInstance:
    """Losses, location-family data maps, and feasible sets for ``n`` players.

    Parameters
    ----------
    dims : GameDims
    feasible : list of per-player sets, or a ProductSet
    bases : list of base distributions (one per player)
    A_own : list of ``m_i x d_i`` matrices
    A_other : list of ``m_i x (d - d_i)`` matrices
    losses : list of loss models
    separable : bool or None (inferred when None)
    """

    def __init__(self, dims, feasible, bases, A_own, A_other, losses, separable=None):
        self.dims = dims
        n, d = dims.n, dims.d
        if isinstance(feasible, ProductSet):
            self.feasible = feasible
        else:
            self.feasible = ProductSet(list(feasible), dims.slices)
        if not (len(bases) == len(A_own) == len(A_other) == len(losses) == n):
            raise ValueError(f"expected {n} bases, A_own, A_other and losses")

        self.bases = tuple(bases)
        self.A_own, self.A_other, self.A_bar = [], [], []
        for i in range(n):
            di, mi = dims.d_i[i], dims.m_i[i]
            Ao = np.atleast_2d(np.asarray(A_own[i], dtype=float))
            Ax = np.asarray(A_other[i], dtype=float).reshape(mi, d - di)
            if Ao.shape != (mi, di):
                raise ValueError(f"A_own[{i}] must be {mi}x{di}, got {Ao.shape}")
            if bases[i].dim != mi:
                raise ValueError(f"base {i} has dimension {bases[i].dim}, expected {mi}")
            Abar = np.zeros((mi, d))
            Abar[:, dims.slices[i]] = Ao
            Abar[:, dims.other_index(i)] = Ax
            self.A_own.append(Ao)
            self.A_other.append(Ax)
            self.A_bar.append(Abar)
        self.A_own, self.A_other, self.A_bar = tuple(self.A_own), tuple(self.A_other), tuple(self.A_bar)

        self.losses = []
        for i, loss in enumerate(losses):
            loss = copy.copy(loss)  # binding mutates; never share between players/games
            di = dims.d_i[i]
            if hasattr(loss, "own_cols"):
                loss.bind(di, d - di, dims.m_i[i], own_cols=dims.slices[i])
            else:
                loss.bind(di, d - di, dims.m_i[i])
            loss.check_base(bases[i])
            self.losses.append(loss)
        self.losses = tuple(self.losses)

        actually = all(loss.separable for loss in self.losses)
        if separable is None:
            separable = actually
        elif separable and not actually:
            raise ValueError("separable=True but some loss couples x_i to x_{-i}")
        self.separable = bool(separable)

        self._build_affine()

    # ------------------------------------------------------------------ setup
    def _build_affine(self):
        dims = self.dims
        d = dims.d
        J = np.zeros((d, d))
        B = np.zeros((d, d))
        g0 = np.zeros(d)
        Mh = np.zeros((d, d))
        Nh = np.zeros((d, d))
        h0 = np.zeros(d)
        self._mean_K, self._mean_C, self._mean_Cz = [], [], []
        for i, (loss, base) in enumerate(zip(self.losses, self.bases)):
            sl, oth = dims.slices[i], dims.other_index(i)
            Kbar, Cbar, Cz = loss.mean_K(base), loss.mean_C(base), loss.mean_C_zeta(base)
            self._mean_K.append(Kbar)
            self._mean_C.append(Cbar)
            self._mean_Cz.append(Cz)
            Ai, Abar = self.A_own[i], self.A_bar[i]
            J[sl, sl] = Kbar
            J[sl, oth] = loss.K_other
            B[sl] = Cbar @ Abar
            g0[sl] = Cz + loss.p
            Mh[sl, sl] = Ai.T @ Cbar.T
            Nh[sl] = Ai.T @ loss.R @ Abar
            h0[sl] = Ai.T @ (loss.R @ base.mean + loss.r)
        self.J, self.B, self.g0 = J, B, g0
        self.Mh, self.Nh, self.h0 = Mh, Nh, h0
        self.D_jac = J + B + Mh + Nh
        self.D_const = g0 + h0

    # --------------------------------------------------------------- sampling
    def draw_base(self, rng, size=None):
        """One base draw per player: list of ``(zeta_i, aux_i)``."""
        return [base.draw(rng, size) for base in self.bases]

    def shift(self, i, x):
        """Mean shift ``A_bar_i x`` of player ``i``'s data."""
        return np.asarray(x) @ self.A_bar[i].T

    def sample(self, x, i, rng, size=None):
        """Draw ``z_i ~ D_i(x)``; returns ``(z_i, aux_i)``."""
        x = self.dims.check(x)
        zeta, aux = self.bases[i].draw(rng, size)
        return zeta + self.shift(i, x), aux

    # ---------------------------------------------------------- affine maps
    def G(self, y, x):
        return np.asarray(x) @ self.J.T + np.asarray(y) @ self.B.T + self.g0

    def H(self, x, y):
        return np.asarray(y) @ self.Mh.T + np.asarray(x) @ self.Nh.T + self.h0

    def D(self, x):
        return np.asarray(x) @ self.D_jac.T + self.D_const

    def retrain_system(self, y):
        """``(J, rhs)`` with ``G_y(x) = J x - rhs``; the static game at ``y`` is linear in x."""
        return self.J, -(self.B @ np.asarray(y) + self.g0)

    # ------------------------------------------------- stochastic directions
    def atom_terms(self, i, corrected=False):
        """Affine description of player ``i``'s sampled direction under each atom.

        ``corrected=False`` gives ``grad_i l_i(x, z)`` (the static-gradient
        sample); ``corrected=True`` adds ``A_i' grad_z l_i(x, z)``.
        """
        dims = self.dims
        loss, base = self.losses[i], self.bases[i]
        sl, oth = dims.slices[i], dims.other_index(i)
        d, di = dims.d, dims.d_i[i]
        Ai, Abar = self.A_own[i], self.A_bar[i]
        out = []
        for a in loss.atoms(base):
            F = np.zeros((di, d))
            F[:, sl] = a.K
            F[:, oth] = loss.K_other
            F = F + a.C @ Abar
            f = a.C @ a.zeta_mean + loss.p
            N = a.C
            if corrected:
                Fz = np.zeros((di, d))
                Fz[:, sl] = Ai.T @ a.C.T
                F = F + Fz + Ai.T @ loss.R @ Abar
                f = f + Ai.T @ (loss.R @ a.zeta_mean + loss.r)
                N = N + Ai.T @ loss.R
            out.append(_AtomTerms(a.weight, F, f, N, a.zeta_cov))
        return out

    def direction_variance(self, x, corrected=False):
        """Exact ``E|g(x,z) - E g(x,z)|^2`` summed over players at a point ``x``."""
        x = self.dims.check(x)
        total = 0.0
        for i in range(self.dims.n):
            terms = self.atom_terms(i, corrected)
            means = [t.F @ x + t.f for t in terms]
            mbar = sum(t.weight * m for t, m in zip(terms, means))
            for t, m in zip(terms, means):
                total += t.weight * (np.sum((m - mbar) ** 2) + np.trace(t.N @ t.cov @ t.N.T))
        return float(total)

    def _variance_bound(self, corrected):
        radius = self.feasible.max_norm()
        total = 0.0
        for i in range(self.dims.n):
            terms = self.atom_terms(i, corrected)
            Fbar = sum(t.weight * t.F for t in terms)
            fbar = sum(t.weight * t.f for t in terms)
            for t in terms:
                slope = np.linalg.norm(t.F - Fbar, 2)
                if slope > 1e-14 * max(1.0, np.linalg.norm(Fbar, 2)):
                    if not np.isfinite(radius):
                        return math.inf
                    spread = slope * radius + np.linalg.norm(t.f - fbar)
                else:
                    spread = np.linalg.norm(t.f - fbar)
                total += t.weight * (spread**2 + np.trace(t.N @ t.cov @ t.N.T))
        return float(np.sqrt(total))

    # ------------------------------------------------------- expected losses
    def loss_quadratics(self):
        """Per-player ``L_i(x) = 1/2 x'Q x + q'x + c`` (expected loss at own data ``D_i(x)``)."""
        dims = self.dims
        d = dims.d
        out = []
        for i, (loss, base) in enumerate(zip(self.losses, self.bases)):
            sl, oth = dims.slices[i], dims.other_index(i)
            E = np.zeros((dims.d_i[i], d))
            E[:, sl] = np.eye(dims.d_i[i])
            O = np.zeros((d - dims.d_i[i], d))
            O[np.arange(d - dims.d_i[i]), oth] = 1.0
            Abar, R, mu = self.A_bar[i], loss.R, base.mean
            cross = E.T @ loss.K_other @ O + E.T @ self._mean_C[i] @ Abar
            Q = E.T @ self._mean_K[i] @ E + cross + cross.T + Abar.T @ R @ Abar
            q = E.T @ (self._mean_Cz[i] + loss.p) + Abar.T @ (R @ mu + loss.r)
            c = 0.5 * (mu @ R @ mu + np.trace(R @ base.cov)) + loss.r @ mu
            out.append((0.5 * (Q + Q.T), q, float(c)))
        return out

    def expected_losses(self, x):
        x = np.asarray(x, dtype=float)
        vals = [0.5 * np.einsum("...i,ij,...j->...", x, Q, x) + x @ q + c for Q, q, c in self.loss_quadratics()]
        return np.stack(vals, axis=-1)

    def social_cost(self, x):
        return np.sum(self.expected_losses(x), axis=-1)

    def social_quadratic(self):
        quads = self.loss_quadratics()
        return sum(Q for Q, _, _ in quads), sum(q for _, q, _ in quads), sum(c for _, _, c in quads)

    # -------------------------------------------------------------- helpers
    @property
    def unconstrained(self):
        return self.feasible.unconstrained

    def project(self, y, shrink=0.0):
        return self.feasible.project(y, shrink)

    def __repr__(self):
        kinds = ",".join(type(l).__name__ for l in self.losses)
        return f"GameInstance(n={self.dims.n}, d={self.dims.d}, losses=[{kinds}])"


# ---------------------------------------------------------------------------
# operation-style API


def project(feasible, y, shrink=0.0):
    if isinstance(feasible, GameInstance):
        feasible = feasible.feasible
    return feasible.project(y, shrink)


def sample_distribution(game, x, player, rng, size=None, return_aux=False):
    z, aux = game.sample(x, player, rng, size)
    return (z, aux) if return_aux else z


def loss_grad_x(game, i, x, z_i, aux=None):
    x = game.dims.check(x)
    return game.losses[i].grad_x(game.dims.block(x, i), game.dims.others(x, i), np.asarray(z_i, float), aux)


def loss_grad_z(game, i, x, z_i, aux=None):
    x = game.dims.check(x)
    return game.losses[i].grad_z(game.dims.block(x, i), game.dims.others(x, i), np.asarray(z_i, float), aux)


def loss_value(game, i, x, z_i, aux=None):
    x = game.dims.check(x)
    return game.losses[i].value(game.dims.block(x, i), game.dims.others(x, i), np.asarray(z_i, float), aux)


def static_grad_map(game, y, x):
    return game.G(game.dims.check(y), game.dims.check(x))


def h_map(game, x, y):
    return game.H(game.dims.check(x), game.dims.check(y))


def performative_grad_map(game, x):
    return game.D(game.dims.check(x))


def _sym_min_eig(M):
    return float(np.linalg.eigvalsh(0.5 * (M + M.T))[0])


def compute_constants(game):
    """Problem constants of ``game``; raises ``AssumptionViolation`` if G(y) is not strongly monotone."""
    dims = game.dims
    alpha = _sym_min_eig(game.J)
    if not alpha > 0:
        raise AssumptionViolation(
            "strong monotonicity of the static game G(y)",
            f"smallest eigenvalue of the symmetrized Jacobian is {alpha:.6g}",
        )
    L = float(np.linalg.norm(game.J, 2))
    beta = tuple(loss.beta(base) for loss, base in zip(game.losses, game.bases))
    gamma = tuple(float(np.linalg.norm(A, 2)) for A in game.A_bar)
    rho = rho_formula(alpha, beta, gamma)

    alpha_i = tuple(_sym_min_eig(game.J[sl, sl]) for sl in dims.slices)
    rho_sep = None
    if game.separable and min(alpha_i) > 0:
        rho_sep = float(np.sqrt(sum((b * g / a) ** 2 for b, g, a in zip(beta, gamma, alpha_i))))

    radius = game.feasible.max_norm()
    parts = []
    for i, (loss, base) in enumerate(zip(game.losses, game.bases)):
        Rn, rn = np.linalg.norm(loss.R, 2), np.linalg.norm(loss.r)
        r_i = game.feasible.sets[i].max_norm()
        zeta_rms = np.sqrt(base.mean @ base.mean + np.trace(base.cov))
        terms = [(beta[i], r_i), (Rn * gamma[i], radius)]
        s = rn + Rn * zeta_rms
        for coef, rad in terms:
            if coef > 0:
                s += coef * rad  # inf when unbounded
        parts.append(s)
    delta_lip = float(np.sqrt(sum(p * p for p in parts)))

    alpha_nash = _sym_min_eig(game.D_jac)
    return GameConstants(
        alpha=alpha,
        beta=beta,
        gamma=gamma,
        rho=rho,
        L=L,
        alpha_i=alpha_i,
        delta_lip=delta_lip,
        sigma=game._variance_bound(corrected=False),
        rho_separable=rho_sep,
        alpha_nash=alpha_nash,
        L_nash=float(np.linalg.norm(game.D_jac, 2)),
        sigma_nash=game._variance_bound(corrected=True),
    )
