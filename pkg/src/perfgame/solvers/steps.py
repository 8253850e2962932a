"""Single iterations of the equilibrium-seeking methods.

Each method has a pure ``*_update`` function that takes its randomness as
arguments (so the batched runner can pre-draw it per seed) and a thin
``*_step`` wrapper that draws from an explicit generator. Everything
broadcasts over a leading batch axis of ``x``.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, replace

import numpy as np

from ..errors import AssumptionViolation
from ..game import compute_constants
from ..oracles import static_nash
from .noise import NoiseModel
from .schedules import agm_eta, agm_k0, agm_nu, agm_q0, estimation_envelope, rsgm_step_bound

log = logging.getLogger(__name__)


def shifted(game, i, x, zeta):
    """``z_i = zeta_i + A_bar_i x`` (row-wise, batch-size independent)."""
    return zeta + np.einsum("...d,md->...m", x, game.A_bar[i])


def _split(game, x, i):
    return game.dims.block(x, i), game.dims.others(x, i)


# ---------------------------------------------------------------- directions


def sampled_directions(game, x, draws, own_effects=None):
    """Per-player sampled gradients and observed losses at ``x``.

    ``own_effects=None`` gives the plain ``grad_i l_i(x, z_i)``. Otherwise it is
    a list of matrices (``m_i x d_i``, possibly batched) used to add the
    correction ``A_ii' grad_z l_i(x, z_i)``.
    """
    dims = game.dims
    g = np.empty(np.shape(x))
    vals = []
    for i, loss in enumerate(game.losses):
        zeta, aux = draws[i]
        xi, xo = _split(game, x, i)
        z = shifted(game, i, x, zeta)
        gi = loss.grad_x(xi, xo, z, aux)
        if own_effects is not None:
            gz = loss.grad_z(xi, xo, z, aux)
            gi = gi + np.einsum("...mi,...m->...i", own_effects[i], gz)
        g[..., dims.slices[i]] = gi
        vals.append(loss.value(xi, xo, z, aux))
    return g, np.stack(vals, axis=-1)


def affine_terms(game, draws, corrected=False):
    """Each sampled gradient written as an affine map of the decision.

    Returns ``(Mx, wx, Mz, wz)`` with ``grad_x(x, z) = Mx x + wx`` (stacked
    over players) and ``grad_z l_i(x, z_i) = Mz[i] x + wz[i]``. Matrices
    carry batch axes only when the loss coefficients depend on the feature
    draw. With ``corrected=True`` the true own-effect term
    ``A_i' grad_z l_i`` is folded into ``Mx``/``wx``.
    """
    dims = game.dims
    d = dims.d
    Mx, wx, Mz, wz = [], [], [], []
    for i, loss in enumerate(game.losses):
        zeta, aux = draws[i]
        K, C = loss.K(aux), loss.C(aux)
        sl, oth = dims.slices[i], dims.other_index(i)
        Abar = game.A_bar[i]
        batch = np.shape(K)[:-2]
        M = np.zeros(batch + (dims.d_i[i], d))
        M[..., sl] = K
        M[..., oth] = loss.K_other
        M = M + np.einsum("...im,md->...id", C, Abar)
        w = np.einsum("...im,...m->...i", C, zeta) + loss.p
        Pz = np.zeros(batch + (dims.m_i[i], d))
        Pz[..., sl] = np.swapaxes(C, -1, -2)
        Pz = Pz + loss.R @ Abar
        pz = np.einsum("...m,km->...k", zeta, loss.R) + loss.r
        if corrected:
            Ai = game.A_own[i]
            M = M + np.einsum("mi,...md->...id", Ai, Pz)
            w = w + np.einsum("mi,...m->...i", Ai, pz)
        Mx.append(M)
        wx.append(w)
        Mz.append(Pz)
        wz.append(pz)
    batch = np.broadcast_shapes(*[np.shape(M)[:-2] for M in Mx])
    Mx = np.concatenate([np.broadcast_to(M, batch + M.shape[-2:]) for M in Mx], axis=-2)
    return Mx, np.concatenate(wx, axis=-1), Mz, wz


def apply_affine(M, w, x):
    """``M x + w`` row by row; ``M`` is shared ``(k, d)`` or batched like ``x``."""
    if M.ndim == 2:
        return np.einsum("kd,...d->...k", M, x) + w
    return np.einsum("...kd,...d->...k", M, x) + w


def observed_losses(game, x, draws):
    """Per-player ``l_i(x, z_i)`` with ``z_i`` built from the base draws at ``x``."""
    vals = []
    for i, loss in enumerate(game.losses):
        zeta, aux = draws[i]
        xi, xo = _split(game, x, i)
        vals.append(loss.value(xi, xo, shifted(game, i, x, zeta), aux))
    return np.stack(vals, axis=-1)


# ------------------------------------------------------------- deterministic


def retrain_step(game, x, inner_tol=1e-10, constants=None, allow_expansive=True):
    """Exact best response of every player to data drawn at ``x`` (Nash of the static game G(x))."""
    x = game.dims.check(x)
    c = constants if constants is not None else compute_constants(game)
    if c.rho >= 1:
        if not allow_expansive:
            raise AssumptionViolation("rho < 1", f"rho = {c.rho:.4f}; retraining may not contract")
        warnings.warn(f"rho = {c.rho:.4f} >= 1; retraining is not guaranteed to contract", stacklevel=2)
    out, _ = static_nash(game, x, tol=inner_tol, x0=x)
    return out


def repeated_gradient_step(game, x, eta):
    x = game.dims.check(x)
    G = np.einsum("...d,kd->...k", x, game.J + game.B) + game.g0
    return game.project(x - eta * G)


# ---------------------------------------------------------------- stochastic


def rsgm_update(game, x, eta, draws):
    g, vals = sampled_directions(game, x, draws)
    return game.project(x - eta * g), vals


def sgm_nash_update(game, x, eta, draws):
    g, vals = sampled_directions(game, x, draws, own_effects=game.A_own)
    return game.project(x - eta * g), vals


def rsgm_step(game, x, eta, rng, strict=False, constants=None):
    """One repeated stochastic gradient step: sample ``z_i ~ D_i(x)``, step along ``grad_i l_i``."""
    if strict:
        c = constants if constants is not None else compute_constants(game)
        bound = rsgm_step_bound(c.alpha, c.rho, c.L)
        if not eta < bound:
            raise AssumptionViolation("eta < alpha(1-rho)/(8L^2)", f"eta={eta}, bound={bound:.4g}")
    x = game.dims.check(x)
    return rsgm_update(game, x, eta, game.draw_base(rng, x.shape[:-1] or None))[0]


def sgm_nash_step(game, x, eta, rng):
    """Stochastic step along ``grad_i l_i + A_i' grad_z l_i`` (unbiased for the full gradient)."""
    x = game.dims.check(x)
    return sgm_nash_update(game, x, eta, game.draw_base(rng, x.shape[:-1] or None))[0]


# ------------------------------------------------------------- derivative free


def sphere_sample(rng, dim, size=None):
    """Uniform draw from the unit sphere in ``R^dim``."""
    shape = (() if size is None else ((size,) if isinstance(size, int) else tuple(size))) + (dim,)
    while True:
        v = rng.standard_normal(shape)
        norm = np.linalg.norm(v, axis=-1, keepdims=True)
        if np.all(norm > 0):
            return v / norm


def joint_sphere_sample(game, rng, size=None):
    """One independent sphere draw per player block, laid out as a joint vector."""
    parts = [sphere_sample(rng, k, size) for k in game.dims.d_i]
    return np.concatenate(parts, axis=-1)


@dataclass(frozen=True)
class DerivativeFreeConfig:
    radius: float  # query radius delta
    eta0: float = 2.0  # eta_t = eta0 / t

    def __post_init__(self):
        if not 0 < self.radius < 1:
            raise ValueError(f"query radius must lie in (0, 1), got {self.radius}")
        if not self.eta0 > 0:
            raise ValueError("eta0 must be positive")

    def eta(self, t):
        return self.eta0 / t

    def validate(self, game):
        """Queries ``x + delta v`` stay feasible only if every ``X_i`` contains the unit ball."""
        for i, s in enumerate(game.feasible.sets):
            if not s.contains_unit_ball():
                raise ValueError(f"player {i}'s set does not contain the unit ball; perturbed queries may leave it")
        return self


def dfo_update(game, x, eta, delta, v, draws=None, observed=None):
    """Derivative-free step from one loss evaluation at ``x + delta v``.

    ``observed`` (shape ``(..., n)``) overrides the sampled loss values.
    """
    dims = game.dims
    xq = x + delta * v
    if observed is None:
        vals = []
        for i, loss in enumerate(game.losses):
            zeta, aux = draws[i]
            qi, qo = _split(game, xq, i)
            vals.append(loss.value(qi, qo, shifted(game, i, xq, zeta), aux))
        observed = np.stack(vals, axis=-1)
    scale = np.repeat(np.asarray(dims.d_i, dtype=float) / delta, dims.d_i)
    per_coord = np.repeat(observed, dims.d_i, axis=-1)
    y = x - eta * scale * per_coord * v
    return game.project(y, shrink=delta), observed


def dfo_step(game, x, cfg, eta, rng):
    x = game.dims.check(x)
    size = x.shape[:-1] or None
    v = joint_sphere_sample(game, rng, size)
    return dfo_update(game, x, eta, cfg.radius, v, game.draw_base(rng, size))[0]


# ------------------------------------------------------------------ adaptive


def online_ls_update(A_hat, b, u, nu):
    """Rank-one least-squares step ``A + nu (b - A u) u'``."""
    resid = b - np.einsum("...md,...d->...m", A_hat, u)
    return A_hat + nu * np.einsum("...m,...d->...md", resid, u)


def agm_update(game, x, A_hat, eta, nu, u, draws_z, draws_q):
    """One adaptive-gradient iteration; ``A_hat`` is a list of (batched) ``m_i x d`` estimates.

    Both data queries share the joint probe ``u``; the gradient uses the
    current estimate, the estimate is refreshed afterwards.
    """
    dims = game.dims
    own_est = [A[..., dims.slices[i]] for i, A in enumerate(A_hat)]
    g, vals = sampled_directions(game, x, draws_z, own_effects=own_est)
    x_new = game.project(x - eta * g)
    xu = x + u
    A_new = []
    for i, A in enumerate(A_hat):
        z = shifted(game, i, x, draws_z[i][0])
        q = shifted(game, i, xu, draws_q[i][0])
        A_new.append(online_ls_update(A, q - z, u, nu))
    return x_new, A_new, vals


@dataclass(frozen=True, eq=False)
class AdaptiveState:
    x: np.ndarray
    A_hat: tuple
    t: int
    k0: float
    q0: float
    alpha: float
    c_l: float
    Z: float

    @property
    def eta(self):
        return agm_eta(self.t, self.alpha, self.k0)

    @property
    def nu(self):
        return agm_nu(self.t, self.c_l, self.q0)


def init_adaptive_state(game, x0, noise: NoiseModel, A_hat1=None, alpha=None, L=None, strict=False):
    """Initial state with the theory schedules; ``alpha``/``L`` default to the full game's constants."""
    if alpha is None or L is None:
        c = compute_constants(game)
        alpha = c.alpha_nash if alpha is None else alpha
        L = c.L_nash if L is None else L
    if not alpha > 0:
        raise AssumptionViolation("strong monotonicity of the game", f"alpha = {alpha:.4g}")
    if A_hat1 is None:
        A_hat1 = [np.zeros_like(A) for A in game.A_bar]
    A_hat1 = tuple(np.array(A, dtype=float) for A in A_hat1)
    q0 = agm_q0(noise.R2, noise.c_l)
    nu1 = agm_nu(1, noise.c_l, q0)
    if nu1 >= 2 / noise.R2_joint:
        msg = f"nu_1 = {nu1:.4g} is not below 2/R^2 for the joint probe ({2 / noise.R2_joint:.4g})"
        if strict:
            raise AssumptionViolation("nu_t < 2/R^2", msg)
        log.warning(msg)
    traces = [float(np.trace(b.cov)) for b in game.bases]
    Z = estimation_envelope(A_hat1, game.A_bar, traces, noise.c_u, noise.c_l, noise.R2)
    return AdaptiveState(
        x=np.array(x0, dtype=float),
        A_hat=A_hat1,
        t=1,
        k0=agm_k0(alpha, L),
        q0=q0,
        alpha=float(alpha),
        c_l=noise.c_l,
        Z=Z,
    )


def agm_step(game, state: AdaptiveState, noise: NoiseModel, rng):
    x = game.dims.check(state.x)
    size = x.shape[:-1] or None
    u = noise.draw(rng, size)
    draws_z = game.draw_base(rng, size)
    draws_q = game.draw_base(rng, size)
    x_new, A_new, _ = agm_update(game, x, list(state.A_hat), state.eta, state.nu, u, draws_z, draws_q)
    return replace(state, x=x_new, A_hat=tuple(A_new), t=state.t + 1)
