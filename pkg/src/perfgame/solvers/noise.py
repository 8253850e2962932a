"""Injected exploration noise for the adaptive gradient method."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GAUSSIAN, RADEMACHER = "gaussian", "rademacher"


@dataclass(frozen=True)
class NoiseModel:
    """Joint probe ``u = (u_1, ..., u_n)`` with i.i.d. coordinates.

    ``c_l``, ``c_u`` (one per player) and ``R2`` are the moment constants
    ``c_l I <= E[v v']``, ``E|v|^2 <= c_u``, ``E[|v|^2 v v'] <= R2 E[v v']``
    stated per player block ``v = u_i``.
    """

    kind: str
    d_i: tuple

    def __post_init__(self):
        if self.kind not in (GAUSSIAN, RADEMACHER):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        object.__setattr__(self, "d_i", tuple(int(v) for v in self.d_i))

    @property
    def d(self):
        return sum(self.d_i)

    @property
    def c_l(self):
        return 1.0

    @property
    def c_u(self):
        return tuple(float(k) for k in self.d_i)

    @property
    def R2(self):
        if self.kind == GAUSSIAN:
            return 3.0 * max(self.d_i)
        # |v|^2 = d_i exactly for sign vectors
        return float(max(self.d_i))

    @property
    def R2_joint(self):
        """Fourth-moment constant of the full probe ``u`` (not just one block)."""
        return float(self.d + 2) if self.kind == GAUSSIAN else float(self.d)

    def draw(self, rng, size=None):
        shape = (() if size is None else ((size,) if isinstance(size, int) else tuple(size))) + (self.d,)
        if self.kind == GAUSSIAN:
            return rng.standard_normal(shape)
        return rng.integers(0, 2, size=shape).astype(float) * 2.0 - 1.0
