"""Closed convex strategy sets and Euclidean projection onto them.

Each player owns one set; the joint set is their product, so projection is
done block by block. Every projection takes a ``shrink`` factor ``s`` in
``[0, 1)`` and projects onto the scaled set ``(1 - s) X`` (scaling about the
origin), which the derivative-free method needs.

All projections broadcast over leading batch dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# one-ulp style safety factor so a radially scaled point never lands outside
_BALL_SAFETY = 1.0 - 4 * np.finfo(float).eps


def _check_shrink(shrink):
    if not 0.0 <= shrink < 1.0:
        raise ValueError(f"shrink must lie in [0, 1), got {shrink}")


@dataclass(frozen=True)
class WholeSpace:
    dim: int

    def project(self, y, shrink=0.0):
        _check_shrink(shrink)
        return np.array(y, dtype=float, copy=True)

    def contains(self, x, shrink=0.0, tol=0.0):
        return np.ones(np.shape(x)[:-1], dtype=bool)

    @property
    def bounded(self):
        return False

    def max_norm(self):
        return np.inf

    def contains_unit_ball(self):
        return True


@dataclass(frozen=True, eq=False)
class Box:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ValueError("Box bounds must be 1-d arrays of equal length")
        if np.any(lower > upper):
            raise ValueError("Box requires lower <= upper coordinatewise")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self):
        return self.lower.size

    def project(self, y, shrink=0.0):
        _check_shrink(shrink)
        scale = 1.0 - shrink
        return np.clip(y, scale * self.lower, scale * self.upper)

    def contains(self, x, shrink=0.0, tol=0.0):
        scale = 1.0 - shrink
        x = np.asarray(x)
        inside = (x >= scale * self.lower - tol) & (x <= scale * self.upper + tol)
        return np.all(inside, axis=-1)

    @property
    def bounded(self):
        return bool(np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper)))

    def max_norm(self):
        return float(np.linalg.norm(np.maximum(np.abs(self.lower), np.abs(self.upper))))

    def contains_unit_ball(self):
        return bool(np.all(self.lower <= -1.0) and np.all(self.upper >= 1.0))


@dataclass(frozen=True, eq=False)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        center = np.atleast_1d(np.asarray(self.center, dtype=float))
        if center.ndim != 1:
            raise ValueError("Ball center must be a 1-d array")
        if not self.radius > 0:
            raise ValueError(f"Ball radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self):
        return self.center.size

    def project(self, y, shrink=0.0):
        _check_shrink(shrink)
        scale = 1.0 - shrink
        c, r = scale * self.center, scale * self.radius
        offset = np.asarray(y, dtype=float) - c
        norm = np.linalg.norm(offset, axis=-1, keepdims=True)
        outside = norm > r
        factor = np.where(outside, r / np.where(outside, norm, 1.0), 1.0)
        out = c + offset * factor
        # radial scaling can overshoot by an ulp; pull those points back in
        over = np.linalg.norm(out - c, axis=-1, keepdims=True) > r
        if np.any(over):
            out = np.where(over, c + (out - c) * _BALL_SAFETY, out)
        return out

    def contains(self, x, shrink=0.0, tol=0.0):
        scale = 1.0 - shrink
        dist = np.linalg.norm(np.asarray(x) - scale * self.center, axis=-1)
        return dist <= scale * self.radius + tol

    @property
    def bounded(self):
        return True

    def max_norm(self):
        return float(np.linalg.norm(self.center) + self.radius)

    def contains_unit_ball(self):
        return bool(np.linalg.norm(self.center) + 1.0 <= self.radius)


class ProductSet:
    """Joint strategy set ``X_1 x ... x X_n`` laid out along the flat decision vector."""

    def __init__(self, sets, slices):
        if len(sets) != len(slices):
            raise ValueError("one set per player block is required")
        for s, sl in zip(sets, slices):
            if s.dim != sl.stop - sl.start:
                raise ValueError(f"set of dimension {s.dim} does not fit block {sl}")
        self.sets = tuple(sets)
        self.slices = tuple(slices)

    def project(self, y, shrink=0.0):
        y = np.asarray(y, dtype=float)
        if y.shape[-1] != self.slices[-1].stop:
            raise ValueError(
                f"expected trailing dimension {self.slices[-1].stop}, got {y.shape[-1]}"
            )
        if all(isinstance(s, WholeSpace) for s in self.sets):
            _check_shrink(shrink)
            return y.copy()
        out = np.empty_like(y)
        for s, sl in zip(self.sets, self.slices):
            out[..., sl] = s.project(y[..., sl], shrink)
        return out

    def contains(self, x, shrink=0.0, tol=0.0):
        x = np.asarray(x)
        ok = np.ones(x.shape[:-1], dtype=bool)
        for s, sl in zip(self.sets, self.slices):
            ok &= s.contains(x[..., sl], shrink, tol)
        return ok

    @property
    def bounded(self):
        return all(s.bounded for s in self.sets)

    @property
    def unconstrained(self):
        return all(isinstance(s, WholeSpace) for s in self.sets)

    def max_norm(self):
        """Largest Euclidean norm of a point of the product set."""
        return float(np.sqrt(sum(s.max_norm() ** 2 for s in self.sets)))
