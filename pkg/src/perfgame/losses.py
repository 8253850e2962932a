"""Per-player losses ``l_i(x, z_i)`` with gradients affine in ``(x, z_i)``.

Every loss here is a quadratic

    l_i = 1/2 x_i' K x_i + x_i' K_o x_{-i} + x_i' C z + 1/2 z' R z + p' x_i + r' z

whose coefficients ``K`` and ``C`` may depend on an auxiliary feature draw
(strategic prediction) while ``K_o``, ``R``, ``p``, ``r`` are fixed. That
structure is what makes every expectation over a location family closed-form.

Gradient and value methods broadcast over leading batch dimensions:
``x_i`` is ``(..., d_i)``, ``x_o`` is ``(..., d - d_i)``, ``z`` is ``(..., m_i)``
and ``aux`` (when present) is ``(..., d_i, m_i)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .distributions import FeatureBase


def _matvec(M, v):
    return np.einsum("...ij,...j->...i", M, v)


def _lin(v, M):
    # v @ M.T without BLAS, so a row's result does not depend on the batch size
    return np.einsum("...j,ij->...i", v, M)


@dataclass(frozen=True)
class Atom:
    """One mixture component of the per-sample coefficients.

    Under the atom, ``K`` and ``C`` are fixed and ``zeta`` has the given
    mean and covariance.
    """

    weight: float
    K: np.ndarray
    C: np.ndarray
    zeta_mean: np.ndarray
    zeta_cov: np.ndarray


class QuadraticLoss:
    """Base class. Subclasses provide coefficients; gradients follow generically."""

    d_own: int
    m: int
    needs_features = False

    # fixed coefficients
    K_other: np.ndarray
    R: np.ndarray
    p: np.ndarray
    r: np.ndarray

    def bind(self, d_own, d_other, m):
        """Check the loss fits a player block; returns self for chaining."""
        raise NotImplementedError

    @property
    def separable(self):
        return not np.any(self.K_other)

    # per-sample coefficients
    def K(self, aux=None):
        raise NotImplementedError

    def C(self, aux=None):
        raise NotImplementedError

    def grad_x(self, x_i, x_o, z, aux=None):
        out = _matvec(self.K(aux), x_i) + _matvec(self.C(aux), z) + self.p
        if self.K_other.size and np.any(self.K_other):
            out = out + _lin(x_o, self.K_other)
        return out

    def grad_z(self, x_i, x_o, z, aux=None):
        C = self.C(aux)
        return np.einsum("...ji,...j->...i", C, x_i) + _lin(z, self.R) + self.r

    def value(self, x_i, x_o, z, aux=None):
        Kx = _matvec(self.K(aux), x_i)
        Cz = _matvec(self.C(aux), z)
        out = 0.5 * np.sum(x_i * Kx, axis=-1) + np.sum(x_i * Cz, axis=-1)
        out = out + 0.5 * np.sum(z * _lin(z, self.R), axis=-1)
        out = out + np.sum(x_i * self.p, axis=-1) + np.sum(z * self.r, axis=-1)
        if self.K_other.size and np.any(self.K_other):
            out = out + np.sum(x_i * _lin(x_o, self.K_other), axis=-1)
        return out

    # expectations over a base distribution
    def atoms(self, base):
        return [Atom(1.0, self.K(), self.C(), base.mean, base.cov)]

    def mean_K(self, base):
        return sum(a.weight * a.K for a in self.atoms(base))

    def mean_C(self, base):
        return sum(a.weight * a.C for a in self.atoms(base))

    def mean_C_zeta(self, base):
        """``E[C zeta]``; differs from ``E[C] E[zeta]`` only for feature draws."""
        return sum(a.weight * a.C @ a.zeta_mean for a in self.atoms(base))

    def beta(self, base):
        """Lipschitz constant of ``z -> grad_x l_i(x, z)``, worst case over feature draws."""
        return max(float(np.linalg.norm(a.C, 2)) for a in self.atoms(base))

    def check_base(self, base):
        if base.dim != self.m:
            raise ValueError(f"base dimension {base.dim} does not match loss data dimension {self.m}")


def _as_matrix(a, shape, name):
    a = np.asarray(a, dtype=float)
    if a.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {a.shape}")
    return a


@dataclass(eq=False)
class Revenue(QuadraticLoss):
    """``l_i = -scale * z' x_i + lam/2 |x_i|^2``; needs ``m_i == d_i``."""

    lam: float
    scale: float = 1.0
    d_own: int = field(default=0, repr=False)
    m: int = field(default=0, repr=False)

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("regularization lam must be nonnegative")
        if not self.scale > 0:
            raise ValueError("scale must be positive")

    def bind(self, d_own, d_other, m):
        if d_own != m:
            raise ValueError(f"revenue loss needs data dimension == decision dimension ({m} != {d_own})")
        self.d_own, self.m = d_own, m
        self.K_other = np.zeros((d_own, d_other))
        self.R = np.zeros((m, m))
        self.p = np.zeros(d_own)
        self.r = np.zeros(m)
        return self

    @property
    def separable(self):
        return True

    def K(self, aux=None):
        return self.lam * np.eye(self.d_own)

    def C(self, aux=None):
        return -self.scale * np.eye(self.d_own)

    def grad_x(self, x_i, x_o, z, aux=None):
        return self.lam * x_i - self.scale * z

    def grad_z(self, x_i, x_o, z, aux=None):
        return np.broadcast_to(-self.scale * x_i, np.broadcast_shapes(np.shape(x_i), np.shape(z))).copy()

    def value(self, x_i, x_o, z, aux=None):
        return -self.scale * np.sum(z * x_i, axis=-1) + 0.5 * self.lam * np.sum(x_i * x_i, axis=-1)


@dataclass(eq=False)
class StrategicPrediction(QuadraticLoss):
    """``l_i = 1/2 |z - Theta' x_i|^2`` with ``Theta`` drawn alongside ``z``."""

    d_own: int = field(default=0, repr=False)
    m: int = field(default=0, repr=False)
    needs_features = True

    def bind(self, d_own, d_other, m):
        self.d_own, self.m = d_own, m
        self.K_other = np.zeros((d_own, d_other))
        self.R = np.eye(m)
        self.p = np.zeros(d_own)
        self.r = np.zeros(m)
        return self

    @property
    def separable(self):
        return True

    def _theta(self, aux):
        if aux is None:
            raise ValueError("strategic prediction loss needs the feature draw (aux)")
        return aux

    def K(self, aux=None):
        theta = self._theta(aux)
        return theta @ np.swapaxes(theta, -1, -2)

    def C(self, aux=None):
        return -self._theta(aux)

    def grad_x(self, x_i, x_o, z, aux=None):
        theta = self._theta(aux)
        resid = np.einsum("...ji,...j->...i", theta, x_i) - z
        return _matvec(theta, resid)

    def grad_z(self, x_i, x_o, z, aux=None):
        theta = self._theta(aux)
        return z - np.einsum("...ji,...j->...i", theta, x_i)

    def value(self, x_i, x_o, z, aux=None):
        theta = self._theta(aux)
        resid = z - np.einsum("...ji,...j->...i", theta, x_i)
        return 0.5 * np.sum(resid * resid, axis=-1)

    def atoms(self, base):
        if not isinstance(base, FeatureBase):
            raise ValueError("strategic prediction loss needs a FeatureBase")
        K = base.thetas.shape[0]
        cov = base.noise_std**2 * np.eye(base.dim)
        return [
            Atom(1.0 / K, th @ th.T, -th, off, cov)
            for th, off in zip(base.thetas, base.offsets)
        ]

    def mean_K(self, base):
        th = self._base_thetas(base)
        return np.einsum("kij,klj->il", th, th) / th.shape[0]

    def mean_C(self, base):
        return -self._base_thetas(base).mean(axis=0)

    def mean_C_zeta(self, base):
        th = self._base_thetas(base)
        return -np.einsum("kij,kj->i", th, base.offsets) / th.shape[0]

    def beta(self, base):
        return float(max(np.linalg.norm(th, 2) for th in self._base_thetas(base)))

    def _base_thetas(self, base):
        if not isinstance(base, FeatureBase):
            raise ValueError("strategic prediction loss needs a FeatureBase")
        return base.thetas

    def check_base(self, base):
        super().check_base(base)
        if not isinstance(base, FeatureBase):
            raise ValueError("strategic prediction loss needs a FeatureBase")
        if base.feature_dim != self.d_own:
            raise ValueError(
                f"feature matrices have {base.feature_dim} rows, decision dimension is {self.d_own}"
            )


@dataclass(eq=False)
class QuadraticCustom(QuadraticLoss):
    """Arbitrary quadratic with fixed coefficients.

    ``xx`` is ``d_i x d`` in joint-vector column order: its own-block columns
    must be symmetric, the remaining columns couple ``x_i`` to ``x_{-i}``.
    """

    xx: np.ndarray
    xz: np.ndarray
    zz: np.ndarray
    x_lin: np.ndarray
    z_lin: np.ndarray
    d_own: int = field(default=0, repr=False)
    m: int = field(default=0, repr=False)
    own_cols: slice | None = field(default=None, repr=False)

    def bind(self, d_own, d_other, m, own_cols=None):
        d = d_own + d_other
        own_cols = own_cols if own_cols is not None else slice(0, d_own)
        self.xx = _as_matrix(self.xx, (d_own, d), "xx")
        self.xz = _as_matrix(self.xz, (d_own, m), "xz")
        self.zz = _as_matrix(self.zz, (m, m), "zz")
        self.x_lin = _as_matrix(self.x_lin, (d_own,), "x_lin")
        self.z_lin = _as_matrix(self.z_lin, (m,), "z_lin")
        own = self.xx[:, own_cols]
        if not np.allclose(own, own.T):
            raise ValueError("own block of xx must be symmetric")
        if not np.allclose(self.zz, self.zz.T):
            raise ValueError("zz must be symmetric")
        mask = np.ones(d, dtype=bool)
        mask[own_cols] = False
        self.d_own, self.m, self.own_cols = d_own, m, own_cols
        self._K = own.copy()
        self.K_other = self.xx[:, mask]
        self.R = self.zz
        self.p = self.x_lin
        self.r = self.z_lin
        return self

    def K(self, aux=None):
        return self._K

    def C(self, aux=None):
        return self.xz


def zero_loss(d_own, m, d):
    """Loss that is identically zero; handy for exercising projections."""
    return QuadraticCustom(
        xx=np.zeros((d_own, d)),
        xz=np.zeros((d_own, m)),
        zz=np.zeros((m, m)),
        x_lin=np.zeros(d_own),
        z_lin=np.zeros(m),
    )
