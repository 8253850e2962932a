"""Ground-truth equilibria and monotonicity certificates for affine games.

Unconstrained problems reduce to one linear solve. On boxes and balls we run
projected iterations on the (strongly monotone) affine operator until the
step stalls at round-off, then report the projected residual
``|x - proj(x - F(x))|``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import AssumptionViolation, InnerSolveFailure, NoCertifiedSolution
from .game import compute_constants

log = logging.getLogger(__name__)

NASH, PERF_STABLE, SOCIAL_OPT = "Nash", "PerfStable", "SocialOpt"
LINEAR_SOLVE, FIXED_POINT = "LinearSolve", "FixedPointIteration"

# condition number past which a linear system is treated as singular
_COND_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class EquilibriumReport:
    kind: str
    point: np.ndarray
    residual: float
    solver: str
    iterations: int = 0

    def to_dict(self):
        return {
            "kind": self.kind,
            "point": [float(v) for v in self.point],
            "residual": float(self.residual),
            "solver": self.solver,
            "iterations": int(self.iterations),
        }


@dataclass(frozen=True)
class MonotonicityCertificate:
    rho: float
    rho_ok: bool
    h_monotone: str  # ConstantMap | SufficientSpectralCondition | Unknown
    modulus: float | None
    spectral_gap: float | None
    alpha: float

    @property
    def passed(self):
        return self.rho_ok and self.h_monotone != "Unknown"

    def to_dict(self):
        return {
            "rho": self.rho,
            "rho_ok": self.rho_ok,
            "h_monotone": self.h_monotone,
            "modulus": self.modulus,
            "spectral_gap": self.spectral_gap,
            "certified": self.passed,
        }


def projected_residual(feasible, x, Fx):
    return float(np.linalg.norm(x - feasible.project(x - Fx)))


def _solve_linear(M, rhs, what):
    if np.linalg.cond(M) > _COND_LIMIT:
        raise NoCertifiedSolution(f"{what}: linear system is singular or numerically singular")
    return np.linalg.solve(M, rhs)


def projected_affine_solve(M, c, feasible, x0=None, tol=1e-13, max_iter=2_000_000):
    """Zero of ``x -> M x + c`` over ``feasible`` in the variational sense.

    Needs ``M`` strongly monotone (smallest eigenvalue of its symmetric part
    positive); uses the safe step ``mu / |M|^2``. Returns ``(x, iterations)``.
    """
    mu = float(np.linalg.eigvalsh(0.5 * (M + M.T))[0])
    if not mu > 0:
        raise NoCertifiedSolution("operator is not strongly monotone; projected iteration has no guarantee")
    Lm = float(np.linalg.norm(M, 2))
    eta = mu / Lm**2
    x = feasible.project(np.zeros(M.shape[0]) if x0 is None else np.asarray(x0, float))
    best = np.inf
    stall = 0
    for k in range(1, max_iter + 1):
        x_new = feasible.project(x - eta * (M @ x + c))
        step = np.linalg.norm(x_new - x)
        x = x_new
        if step <= tol * max(1.0, np.linalg.norm(x)):
            return x, k
        # contraction means the step should keep shrinking; watch for a plateau
        if step < best * (1 - 1e-12):
            best, stall = step, 0
        else:
            stall += 1
            if stall > 1000:
                if step <= 1e-10 * max(1.0, np.linalg.norm(x)):
                    return x, k  # round-off floor
                raise InnerSolveFailure(f"projected iteration stalled at step {step:.3e}")
    raise InnerSolveFailure(f"projected iteration hit {max_iter} iterations")


def static_nash(game, y, tol=1e-13, x0=None):
    """Nash point of the static game with data frozen at ``y``; returns ``(x, iterations)``."""
    J, rhs = game.retrain_system(y)
    if game.unconstrained:
        return np.linalg.solve(J, rhs), 1
    return projected_affine_solve(J, -rhs, game.feasible, x0=x0 if x0 is not None else y, tol=tol)


def _own_blocks_convex(game):
    for i, sl in enumerate(game.dims.slices):
        block = game.D_jac[sl, sl]
        if np.linalg.eigvalsh(0.5 * (block + block.T))[0] <= 0:
            return i
    return None


def solve_nash(game):
    bad = _own_blocks_convex(game)
    if bad is not None:
        raise NoCertifiedSolution(
            f"player {bad}'s expected loss is not strongly convex in its own decision"
        )
    M, c = game.D_jac, game.D_const
    if game.unconstrained:
        x = _solve_linear(M, -c, "Nash")
        return EquilibriumReport(NASH, x, float(np.linalg.norm(game.D(x))), LINEAR_SOLVE, 1)
    x, its = projected_affine_solve(M, c, game.feasible, tol=1e-14)
    return EquilibriumReport(NASH, x, projected_residual(game.feasible, x, game.D(x)), FIXED_POINT, its)


def solve_perf_stable(game, method="auto", tol=1e-14, max_outer=100_000):
    """Performatively stable point: solves ``G_x(x) = 0`` (projected form on constrained sets).

    ``method="linear"`` solves ``(J + B) x = -g0`` directly (whole space only);
    ``"iterative"`` runs exact repeated retraining, which needs rho < 1.
    """
    consts = compute_constants(game)  # raises if the static game is not strongly monotone
    if method == "auto":
        method = "linear" if game.unconstrained else "iterative"
    if method == "linear":
        if not game.unconstrained:
            raise ValueError("linear method only applies on the whole space")
        x = _solve_linear(game.J + game.B, -game.g0, "performatively stable point")
        return EquilibriumReport(PERF_STABLE, x, float(np.linalg.norm(game.G(x, x))), LINEAR_SOLVE, 1)
    if method != "iterative":
        raise ValueError(f"unknown method {method!r}")
    if consts.rho >= 1:
        raise NoCertifiedSolution(f"rho = {consts.rho:.4f} >= 1, retraining is not a contraction")
    x = game.project(np.zeros(game.dims.d))
    for k in range(1, max_outer + 1):
        x_new, _ = static_nash(game, x, tol=1e-15, x0=x)
        step = np.linalg.norm(x_new - x)
        x = x_new
        if step <= tol * max(1.0, np.linalg.norm(x)):
            break
    else:
        raise NoCertifiedSolution("retraining did not settle within the iteration cap")
    return EquilibriumReport(PERF_STABLE, x, projected_residual(game.feasible, x, game.G(x, x)), FIXED_POINT, k)


def solve_social_opt(game):
    Q, q, _ = game.social_quadratic()
    lo = float(np.linalg.eigvalsh(Q)[0])
    if not lo > 0:
        raise NoCertifiedSolution(f"social cost Hessian is not positive definite (min eigenvalue {lo:.3g})")
    if game.unconstrained:
        x = np.linalg.solve(Q, -q)
        return EquilibriumReport(SOCIAL_OPT, x, float(np.linalg.norm(Q @ x + q)), LINEAR_SOLVE, 1)
    x, its = projected_affine_solve(Q, q, game.feasible, tol=1e-14)
    return EquilibriumReport(SOCIAL_OPT, x, projected_residual(game.feasible, x, Q @ x + q), FIXED_POINT, its)


SOLVERS = {"nash": solve_nash, "perf_stable": solve_perf_stable, "social_opt": solve_social_opt}


def solve(game, kind):
    try:
        return SOLVERS[kind](game)
    except KeyError:
        raise ValueError(f"unknown equilibrium kind {kind!r}; choose from {sorted(SOLVERS)}") from None


def spectral_gap(game):
    """``min_i lmin(A_i'A_i) - sqrt(n-1) max_i |A_{-i}'A_i|``."""
    n = game.dims.n
    own = min(float(np.linalg.eigvalsh(A.T @ A)[0]) for A in game.A_own)
    cross = max(
        (float(np.linalg.norm(Ao.T @ A, 2)) if Ao.size else 0.0)
        for A, Ao in zip(game.A_own, game.A_other)
    )
    return own - np.sqrt(n - 1) * cross


def certify_monotone(game, constants=None):
    """Sufficient check that ``D`` is ``(1 - 2 rho) alpha``-strongly monotone."""
    from .losses import StrategicPrediction

    if constants is None:
        try:
            constants = compute_constants(game)
        except AssumptionViolation:
            return MonotonicityCertificate(float("nan"), False, "Unknown", None, None, float("nan"))
    rho, alpha = constants.rho, constants.alpha
    rho_ok = bool(rho < 0.5)
    gap = None
    if not np.any(game.Nh):
        tag = "ConstantMap"  # H_x(y) does not move with x
    elif all(isinstance(l, StrategicPrediction) for l in game.losses):
        gap = float(spectral_gap(game))
        tag = "SufficientSpectralCondition" if gap >= 0 else "Unknown"
    else:
        tag = "Unknown"
    if all(isinstance(l, StrategicPrediction) for l in game.losses) and gap is None:
        gap = float(spectral_gap(game))
    modulus = (1 - 2 * rho) * alpha if (rho_ok and tag != "Unknown") else None
    return MonotonicityCertificate(float(rho), rho_ok, tag, modulus, gap, float(alpha))
