"""Multi-seed solver runs.

Seeds are run side by side as one ``(S, d)`` state. Every seed owns its own
``numpy.random.Generator`` and its randomness is drawn in fixed-size chunks
from that generator alone, so a seed's trajectory does not depend on which
other seeds share the batch (row-wise arithmetic avoids BLAS for the same
reason).
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..errors import AssumptionViolation
from ..game import compute_constants
from ..oracles import static_nash
from .noise import NoiseModel
from .schedules import (
    StepDecaySchedule,
    agm_eta,
    agm_nu,
    constant_steps,
    inverse_steps,
    rsgm_step_bound,
)
from .steps import (
    DerivativeFreeConfig,
    affine_terms,
    apply_affine,
    dfo_update,
    init_adaptive_state,
    joint_sphere_sample,
    observed_losses,
    online_ls_update,
)

log = logging.getLogger(__name__)

ALGORITHMS = ("retrain", "rgd", "rsgm", "sgm", "dfo", "agm")
_ALIASES = {"sgm_nash": "sgm", "sgm-nash": "sgm", "repeated_gradient": "rgd"}
CHUNK = 512
DIVERGENCE = 1e8
_CONFIG_KEYS = {
    "algorithm", "step_size", "schedule", "iterations", "seed", "inner_tol",
    "dfo", "agm", "strict_mode", "iterate_every", "record_losses",
}


@dataclass
class SolverConfig:
    algorithm: str
    step_size: float | None = None
    schedule: dict | None = None
    iterations: int | None = None
    seed: int = 0
    inner_tol: float = 1e-10
    dfo: dict = field(default_factory=dict)
    agm: dict = field(default_factory=dict)
    strict_mode: bool = False
    iterate_every: int | None = None
    record_losses: bool = True

    def __post_init__(self):
        self.algorithm = _ALIASES.get(self.algorithm, self.algorithm)
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; choose from {', '.join(ALGORITHMS)}")
        if self.step_size is not None and self.schedule is not None:
            raise ValueError("give either step_size or schedule, not both")
        if self.step_size is not None and not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if self.iterations is not None and self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        extra = set(self.dfo) - {"radius", "eta0"}
        if extra:
            raise ValueError(f"unknown dfo keys: {sorted(extra)}")
        extra = set(self.agm) - {"noise_kind"}
        if extra:
            raise ValueError(f"unknown agm keys: {sorted(extra)}")

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - _CONFIG_KEYS
        if unknown:
            raise ValueError(f"unknown solver config keys: {sorted(unknown)}")
        if "algorithm" not in d:
            raise ValueError("solver config needs an 'algorithm'")
        return cls(**d)

    def to_dict(self):
        return {
            "algorithm": self.algorithm,
            "step_size": self.step_size,
            "schedule": self.schedule,
            "iterations": self.iterations,
            "seed": self.seed,
            "inner_tol": self.inner_tol,
            "dfo": dict(self.dfo),
            "agm": dict(self.agm),
            "strict_mode": self.strict_mode,
            "iterate_every": self.iterate_every,
            "record_losses": self.record_losses,
        }


@dataclass(eq=False)
class Trajectory:
    solver: str
    seed: int
    iterations: int
    error_sq: np.ndarray | None  # (T,) squared distance of x^{t+1} to the reference
    losses: np.ndarray | None  # (T, n) loss observed at iteration t
    iterates: np.ndarray  # thinned x^t, first row is x^0
    iterate_steps: np.ndarray
    final: np.ndarray
    reference: np.ndarray | None
    config: dict
    diverged: bool = False
    extra: dict = field(default_factory=dict)
    elapsed: float = 0.0

    def digest(self):
        """Hash of everything except wall-clock time."""
        h = hashlib.sha256()
        h.update(json.dumps({"solver": self.solver, "seed": self.seed, "iterations": self.iterations,
                             "config": self.config, "diverged": self.diverged}, sort_keys=True).encode())
        for arr in (self.error_sq, self.losses, self.iterates, self.iterate_steps, self.final, self.reference):
            if arr is not None:
                h.update(np.ascontiguousarray(arr).tobytes())
        for k in sorted(self.extra):
            h.update(k.encode())
            h.update(np.ascontiguousarray(self.extra[k]).tobytes())
        return h.hexdigest()


# ------------------------------------------------------------------ steps


def resolve_steps(game, cfg, constants, T=None):
    """Per-iteration step sizes (and iteration count) for ``cfg``; returns ``(etas, T, schedule)``."""
    alg = cfg.algorithm
    sched_obj = None
    if cfg.schedule is not None:
        kind = cfg.schedule.get("kind")
        if kind == "constant":
            etas = lambda T: constant_steps(cfg.schedule["eta"], T)  # noqa: E731
        elif kind == "inverse":
            etas = lambda T: inverse_steps(cfg.schedule["eta0"], T, cfg.schedule.get("t0", 0.0))  # noqa: E731
        elif kind == "step_decay":
            eps, R = cfg.schedule["target_eps"], cfg.schedule["radius_sq"]
            if alg == "rsgm":
                sched_obj = StepDecaySchedule.rsgm(
                    constants.alpha, constants.rho, constants.L, R, eps, constants.sigma
                )
            elif alg == "sgm":
                sched_obj = StepDecaySchedule.sgm_nash(
                    constants.alpha_nash, constants.L_nash, R, eps, constants.sigma_nash
                )
            else:
                raise ValueError("step_decay schedules apply to rsgm and sgm only")
            full = sched_obj.etas()
            etas = lambda T: full[:T] if T <= full.size else np.concatenate([full, np.full(T - full.size, full[-1])])  # noqa: E731
            if T is None and cfg.iterations is None:
                T = full.size
        elif kind == "theory":
            if alg != "agm":
                raise ValueError("the 'theory' schedule is only defined for agm")
            etas = None
        else:
            raise ValueError(f"unknown schedule kind {kind!r}")
    elif cfg.step_size is not None:
        etas = lambda T: constant_steps(cfg.step_size, T)  # noqa: E731
    elif alg == "rgd":
        etas = lambda T: constant_steps(constants.alpha / constants.L**2, T)  # noqa: E731
    elif alg == "dfo":
        eta0 = cfg.dfo.get("eta0", 2.0)
        etas = lambda T: inverse_steps(eta0, T)  # noqa: E731
    elif alg in ("rsgm", "sgm"):
        etas = lambda T: constant_steps(1e-3, T)  # noqa: E731
    else:
        etas = None  # retrain has no step; agm uses its theory schedule

    T = T if T is not None else (cfg.iterations if cfg.iterations is not None else 1000)
    return (etas(T) if etas is not None else None), T, sched_obj


# ------------------------------------------------------------------- draws


def _stack_base(game, rngs, c):
    """Per player ``(zeta, aux)`` with shapes ``(S, c, ...)``, seed by seed."""
    return _restack([game.draw_base(r, c) for r in rngs], game.dims.n)


def _at(draws, k):
    return [(z[:, k], None if a is None else a[:, k]) for z, a in draws]


# ------------------------------------------------------------------ runner


def run_solver(game, cfg, seeds=None, reference=None, x0=None, constants=None):
    """Run ``cfg`` once per seed; returns a list of Trajectory sorted by seed.

    ``x0`` is a single point or one row per (sorted) seed; defaults to the
    projection of the origin.
    """
    t_start = time.perf_counter()
    seeds = sorted({int(s) for s in (seeds if seeds is not None else [cfg.seed])})
    S, d, n = len(seeds), game.dims.d, game.dims.n
    c = constants if constants is not None else compute_constants(game)
    etas, T, sched = resolve_steps(game, cfg, c)
    alg = cfg.algorithm

    if cfg.strict_mode:
        if alg == "retrain" and c.rho >= 1:
            raise AssumptionViolation("rho < 1", f"rho = {c.rho:.4f}")
        if alg == "rsgm" and sched is None and etas is not None:
            bound = rsgm_step_bound(c.alpha, c.rho, c.L)
            if np.max(etas) >= bound:
                raise AssumptionViolation("eta < alpha(1-rho)/(8L^2)", f"max eta {np.max(etas):.4g} >= {bound:.4g}")
    elif alg == "retrain" and c.rho >= 1:
        warnings.warn(f"rho = {c.rho:.4f} >= 1; retraining may not contract", stacklevel=2)

    shrink = 0.0
    dfo_cfg = None
    if alg == "dfo":
        dfo_cfg = DerivativeFreeConfig(cfg.dfo.get("radius", 0.5), cfg.dfo.get("eta0", 2.0)).validate(game)
        shrink = dfo_cfg.radius

    if x0 is None:
        X = np.zeros((S, d))
    else:
        X = np.broadcast_to(np.asarray(x0, dtype=float), (S, d)).copy()
    X = game.project(X, shrink=shrink)

    ref = None if reference is None else np.asarray(reference, dtype=float)
    every = cfg.iterate_every or (1 if T < 10_000 else 10)
    rec_steps = np.arange(0, T + 1, every)
    if rec_steps[-1] != T:
        rec_steps = np.append(rec_steps, T)
    iterates = np.empty((S, rec_steps.size, d))
    iterates[:, 0] = X
    rec_ptr = 1
    err = np.full((S, T), np.nan) if ref is not None else None
    losses = np.full((S, T, n), np.nan) if cfg.record_losses else None
    stop = np.full(S, T)  # number of valid records per seed
    live = np.ones(S, dtype=bool)
    cut_at = {}  # seed index -> iterate where the run was truncated
    extra = {}

    rngs = [np.random.default_rng(s) for s in seeds]

    # algorithm-specific setup
    if alg == "retrain" and game.unconstrained:
        J_inv = np.linalg.inv(game.J)
    if alg == "agm":
        noise = NoiseModel(cfg.agm.get("noise_kind", "gaussian"), game.dims.d_i)
        state = init_adaptive_state(game, X[0], noise, strict=cfg.strict_mode, alpha=c.alpha_nash, L=c.L_nash)
        A_hat = [np.broadcast_to(A, (S,) + A.shape).copy() for A in state.A_hat]
        est = extra["est_error_sq"] = np.full((S, T), np.nan)
        extra_meta = {"Z": state.Z, "q0": state.q0, "k0": state.k0}
        if etas is None:
            t_idx = np.arange(1, T + 1)
            etas = agm_eta(t_idx, state.alpha, state.k0)
        nus = agm_nu(np.arange(1, T + 1), state.c_l, state.q0)

    t = 0
    with np.errstate(over="ignore", invalid="ignore"):
        while t < T:
            cn = min(CHUNK, T - t)
            pre = np.empty((S, cn, d))
            post = np.empty((S, cn, d))
            if alg in ("rsgm", "sgm"):
                draws = _stack_base(game, rngs, cn)
                Mx, wx, _, _ = affine_terms(game, draws, corrected=(alg == "sgm"))
            elif alg == "dfo":
                # sphere draws come first for each seed, then the data
                V = np.stack([joint_sphere_sample(game, r, cn) for r in rngs])
                draws = _stack_base(game, rngs, cn)
                dfo_vals = np.empty((S, cn, n))
            elif alg == "agm":
                U, Dz, Dq = [], [], []
                for r in rngs:
                    U.append(noise.draw(r, cn))
                    Dz.append(game.draw_base(r, cn))
                    Dq.append(game.draw_base(r, cn))
                U = np.stack(U)
                draws = _restack(Dz, n)
                draws_q = _restack(Dq, n)
                Mx, wx, Mz, wz = affine_terms(game, draws)
                # q_i - z_i = zeta_q - zeta_z + A_bar_i u
                resid = [
                    draws_q[i][0] - draws[i][0] + np.einsum("scd,md->scm", U, game.A_bar[i])
                    for i in range(n)
                ]

            for k in range(cn):
                pre[:, k] = X
                eta = None if etas is None else etas[t + k]
                if alg == "retrain":
                    if game.unconstrained:
                        rhs = -(np.einsum("sd,kd->sk", X, game.B) + game.g0)
                        X = np.einsum("kd,sd->sk", J_inv, rhs)
                    else:
                        X = np.stack([static_nash(game, x, tol=cfg.inner_tol, x0=x)[0] for x in X])
                elif alg == "rgd":
                    G = np.einsum("sd,kd->sk", X, game.J + game.B) + game.g0
                    X = game.project(X - eta * G)
                elif alg in ("rsgm", "sgm"):
                    M = Mx if Mx.ndim == 2 else Mx[:, k]
                    X = game.project(X - eta * apply_affine(M, wx[:, k], X))
                elif alg == "dfo":
                    X, dfo_vals[:, k] = dfo_update(game, X, eta, dfo_cfg.radius, V[:, k], _at(draws, k))
                else:  # agm
                    est[:, t + k] = sum(np.sum((A - Ab) ** 2, axis=(1, 2)) for A, Ab in zip(A_hat, game.A_bar))
                    g = apply_affine(Mx if Mx.ndim == 2 else Mx[:, k], wx[:, k], X)
                    for i, sl in enumerate(game.dims.slices):
                        gz = apply_affine(Mz[i] if Mz[i].ndim == 2 else Mz[i][:, k], wz[i][:, k], X)
                        g[:, sl] += np.einsum("smi,sm->si", A_hat[i][:, :, sl], gz)
                        A_hat[i] = online_ls_update(A_hat[i], resid[i][:, k], U[:, k], nus[t + k])
                    X = game.project(X - eta * g)
                post[:, k] = X

            if losses is not None:
                if alg in ("retrain", "rgd"):
                    losses[:, t : t + cn] = game.expected_losses(pre)
                elif alg == "dfo":
                    losses[:, t : t + cn] = dfo_vals
                else:
                    losses[:, t : t + cn] = observed_losses(game, pre, draws)
            if ref is not None:
                e = np.sum((post - ref) ** 2, axis=-1)
                err[:, t : t + cn] = e
                for s in np.flatnonzero(live):
                    over = np.flatnonzero(~(e[s] <= DIVERGENCE))
                    if over.size:
                        stop[s] = t + over[0] + 1
                        live[s] = False
                        cut_at[s] = post[s, over[0]].copy()
                        X[s] = 0.0  # frozen; nothing after the cut is reported
                        log.warning("seed %d of %s diverged at iteration %d", seeds[s], alg, stop[s])
            while rec_ptr < rec_steps.size and rec_steps[rec_ptr] <= t + cn:
                iterates[:, rec_ptr] = post[:, rec_steps[rec_ptr] - t - 1]
                rec_ptr += 1
            t += cn

    elapsed = time.perf_counter() - t_start
    cfg_snapshot = cfg.to_dict()
    if sched is not None:
        cfg_snapshot["resolved_schedule"] = sched.to_dict()
    out = []
    for s, seed in enumerate(seeds):
        n_ok = int(stop[s])
        keep = rec_steps <= n_ok
        ex = {k: v[s, :n_ok].copy() for k, v in extra.items()}
        if alg == "agm":
            ex.update({k: np.array(v) for k, v in extra_meta.items()})
        out.append(
            Trajectory(
                solver=alg,
                seed=seed,
                iterations=n_ok,
                error_sq=None if err is None else err[s, :n_ok].copy(),
                losses=None if losses is None else losses[s, :n_ok].copy(),
                iterates=iterates[s, keep].copy(),
                iterate_steps=rec_steps[keep].copy(),
                final=cut_at[s] if s in cut_at else X[s].copy(),
                reference=ref,
                config=dict(cfg_snapshot, seed=seed),
                diverged=bool(n_ok < T),
                extra=ex,
                elapsed=elapsed / S,
            )
        )
    return out


def _restack(per_seed, n):
    out = []
    for i in range(n):
        zeta = np.stack([p[i][0] for p in per_seed])
        aux = per_seed[0][i][1]
        aux = None if aux is None else np.stack([p[i][1] for p in per_seed])
        out.append((zeta, aux))
    return out


def run_step_decay(game, x0, schedule: StepDecaySchedule, rng, step_fn, reference=None):
    """Run ``step_fn(game, x, eta, rng)`` epoch by epoch; last iterate of an epoch seeds the next."""
    x = game.project(np.asarray(x0, dtype=float))
    T = schedule.total_iterations
    errs = np.empty(T) if reference is not None else None
    every = 1 if T < 10_000 else 10
    kept, steps = [x.copy()], [0]
    t = 0
    for eta, Tk in schedule.epochs:
        for _ in range(Tk):
            x = step_fn(game, x, eta, rng)
            t += 1
            if errs is not None:
                errs[t - 1] = np.sum((x - reference) ** 2)
            if t % every == 0 or t == T:
                kept.append(x.copy())
                steps.append(t)
    return Trajectory(
        solver=schedule.flavor,
        seed=-1,
        iterations=T,
        error_sq=errs,
        losses=None,
        iterates=np.array(kept),
        iterate_steps=np.array(steps),
        final=x,
        reference=None if reference is None else np.asarray(reference, float),
        config={"schedule": schedule.to_dict()},
    )
