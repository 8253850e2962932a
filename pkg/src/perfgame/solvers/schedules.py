"""Step-size rules: constant, 1/t, the two step-decay flavors, and the adaptive-method schedules."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import AssumptionViolation

RSGM, SGM_NASH = "RSGM", "SGM-Nash"


def _ceil(v):
    # guard against 3015.0000000000005-style noise pushing a ceiling up by one
    r = round(v)
    if abs(v - r) <= 1e-9 * max(1.0, abs(v)):
        return int(r)
    return int(math.ceil(v))


@dataclass(frozen=True)
class StepDecaySchedule:
    """Epoch schedule ``eta_k = eta0 2^-k`` run for ``T_k`` steps, ``k = 0..K``."""

    flavor: str
    eta0: float
    epochs: tuple  # ((eta_k, T_k), ...)
    K: int
    target_eps: float
    radius_sq: float
    sigma: float

    @classmethod
    def rsgm(cls, alpha, rho, L, radius_sq, eps, sigma):
        if not 0 <= rho < 1:
            raise AssumptionViolation("rho < 1", f"rho = {rho}")
        _check(alpha, L, radius_sq, eps)
        c = (1 - rho) * alpha
        eta0 = (c / 4) * min(1.0, 1.0 / (2 * L**2))
        T0 = _ceil(10 / (c * eta0) * math.log(2 * radius_sq / eps))
        K = _epoch_count(40 * eta0 * sigma**2 / (c * eps))
        epochs = [(eta0, T0)]
        for k in range(1, K + 1):
            eta = eta0 * 2.0**-k
            epochs.append((eta, _ceil(10 * math.log(4) / (c * eta))))
        return cls(RSGM, eta0, tuple(epochs), K, eps, radius_sq, sigma)

    @classmethod
    def sgm_nash(cls, alpha, L, radius_sq, eps, sigma):
        _check(alpha, L, radius_sq, eps)
        eta0 = alpha / (2 * L**2)
        T0 = _ceil(2 / (alpha * eta0) * math.log(2 * radius_sq / eps))
        K = _epoch_count(2 * eta0 * sigma**2 / (alpha * eps))
        epochs = [(eta0, T0)]
        for k in range(1, K + 1):
            eta = eta0 * 2.0**-k
            epochs.append((eta, _ceil(2 * math.log(4) / (alpha * eta))))
        return cls(SGM_NASH, eta0, tuple(epochs), K, eps, radius_sq, sigma)

    @property
    def T0(self):
        return self.epochs[0][1]

    @property
    def total_iterations(self):
        return sum(T for _, T in self.epochs)

    def etas(self):
        """Per-iteration step sizes, epochs laid end to end."""
        return np.concatenate([np.full(T, eta) for eta, T in self.epochs])

    def to_dict(self):
        return {
            "flavor": self.flavor,
            "eta0": self.eta0,
            "epochs": [[e, t] for e, t in self.epochs],
            "K": self.K,
            "target_eps": self.target_eps,
            "radius_sq": self.radius_sq,
            "sigma": self.sigma,
        }


def _check(alpha, L, radius_sq, eps):
    if not (alpha > 0 and L > 0 and eps > 0 and radius_sq > 0):
        raise ValueError("alpha, L, radius_sq and eps must be positive")


def _epoch_count(ratio):
    # K = ceil(1 + log2(ratio)), never negative; zero variance means one epoch
    if ratio <= 0:
        return 0
    if not math.isfinite(ratio):
        raise ValueError("gradient variance bound is infinite (unbounded feasible set with data-dependent slopes)")
    return max(0, _ceil(1 + math.log2(ratio)))


def one_step_coefficient(eta, alpha, rho):
    """Contraction factor of one biased stochastic step in expectation (noise-free part)."""
    num = 1 + 2 * eta * alpha * rho + 2 * eta**2 * alpha**2 * rho**2
    return num / (1 + 2 * eta * alpha * (1 + rho) / 2)


def rsgm_step_bound(alpha, rho, L):
    """Largest step for which the one-step improvement guarantee is stated."""
    return alpha * (1 - rho) / (8 * L**2)


# ---- adaptive method ---------------------------------------------------------


def agm_k0(alpha, L):
    return 1 + 8 * L**2 / alpha**2


def agm_q0(R2, c_l):
    return 2 * R2 / c_l


def agm_eta(t, alpha, k0):
    return 2.0 / (alpha * (t + k0 - 2))


def agm_nu(t, c_l, q0):
    return 2.0 / (c_l * (t + q0))


def estimation_envelope(A_hat1, A_bar, traces, c_u, c_l, R2):
    """``Z`` in the bound ``E|A^t - A|_F^2 <= Z / (t + q0)`` for online least squares."""
    err = sum(float(np.sum((a - b) ** 2)) for a, b in zip(A_hat1, A_bar))
    noise = 8 * sum(tr * cu for tr, cu in zip(traces, c_u)) / c_l**2
    return max((1 + 2 * R2 / c_l) * err, noise)


# ---- simple per-iteration rules ----------------------------------------------


def constant_steps(eta, T):
    return np.full(T, float(eta))


def inverse_steps(eta0, T, t0=0.0):
    t = np.arange(1, T + 1, dtype=float)
    return eta0 / (t + t0)
