"""Base distributions for location families ``z_i = zeta_i + A_i x_i + A_{-i} x_{-i}``.

A base only knows how to draw ``zeta`` and report its first two moments. The
feature base additionally returns the feature matrix that generated each draw,
which strategic-prediction losses consume.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _size(size):
    if size is None:
        return ()
    if isinstance(size, int):
        return (size,)
    return tuple(size)


@dataclass(frozen=True, eq=False)
class Deterministic:
    """Point mass at ``mean``."""

    mean: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", np.atleast_1d(np.asarray(self.mean, dtype=float)))

    @property
    def dim(self):
        return self.mean.size

    @property
    def cov(self):
        return np.zeros((self.dim, self.dim))

    def draw(self, rng, size=None):
        shape = _size(size) + (self.dim,)
        return np.broadcast_to(self.mean, shape).copy(), None


@dataclass(frozen=True, eq=False)
class Gaussian:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if cov.shape != (mean.size, mean.size):
            raise ValueError(f"covariance shape {cov.shape} does not match mean of size {mean.size}")
        if not np.allclose(cov, cov.T):
            raise ValueError("covariance must be symmetric")
        w, v = np.linalg.eigh(cov)
        if w.min() < -1e-12 * max(1.0, abs(w).max()):
            raise ValueError("covariance must be positive semidefinite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "_factor", v * np.sqrt(np.clip(w, 0.0, None)))

    @property
    def dim(self):
        return self.mean.size

    def draw(self, rng, size=None):
        eps = rng.standard_normal(_size(size) + (self.dim,))
        return self.mean + eps @ self._factor.T, None


@dataclass(frozen=True, eq=False)
class Empirical:
    """Uniform distribution over the rows of ``samples``."""

    samples: np.ndarray

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim == 1:
            samples = samples[:, None]
        if samples.ndim != 2 or samples.shape[0] == 0:
            raise ValueError("Empirical base needs a non-empty (N, m) sample matrix")
        object.__setattr__(self, "samples", samples)

    @property
    def dim(self):
        return self.samples.shape[1]

    @property
    def mean(self):
        return self.samples.mean(axis=0)

    @property
    def cov(self):
        centered = self.samples - self.mean
        return centered.T @ centered / self.samples.shape[0]

    def draw(self, rng, size=None):
        idx = rng.integers(0, self.samples.shape[0], size=_size(size))
        return self.samples[idx], None


@dataclass(frozen=True, eq=False)
class FeatureBase:
    """Feature-driven base for strategic prediction.

    A draw picks one of the ``K`` feature matrices ``thetas[k]`` (shape
    ``d_i x m_i``) uniformly, and returns ``zeta = offsets[k] + w`` with
    ``w ~ N(0, noise_std^2 I)``. ``offsets[k]`` plays the role of the
    arbitrary map evaluated at the feature draw.
    """

    thetas: np.ndarray
    offsets: np.ndarray
    noise_std: float = 0.0

    def __post_init__(self):
        thetas = np.asarray(self.thetas, dtype=float)
        offsets = np.asarray(self.offsets, dtype=float)
        if thetas.ndim != 3:
            raise ValueError("thetas must have shape (K, d_i, m_i)")
        if offsets.shape != (thetas.shape[0], thetas.shape[2]):
            raise ValueError(
                f"offsets must have shape (K, m_i) = {(thetas.shape[0], thetas.shape[2])}"
            )
        if self.noise_std < 0:
            raise ValueError("noise_std must be nonnegative")
        object.__setattr__(self, "thetas", thetas)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "noise_std", float(self.noise_std))

    @property
    def dim(self):
        return self.offsets.shape[1]

    @property
    def feature_dim(self):
        return self.thetas.shape[1]

    @property
    def mean(self):
        return self.offsets.mean(axis=0)

    @property
    def cov(self):
        centered = self.offsets - self.mean
        return centered.T @ centered / self.offsets.shape[0] + self.noise_std**2 * np.eye(self.dim)

    def draw(self, rng, size=None):
        size = _size(size)
        idx = rng.integers(0, self.thetas.shape[0], size=size)
        zeta = self.offsets[idx]
        if self.noise_std > 0:
            zeta = zeta + self.noise_std * rng.standard_normal(size + (self.dim,))
        return zeta, self.thetas[idx]
