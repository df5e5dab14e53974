"""Seeded samplers over a chart box and its cotangent fibers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError


@dataclass(frozen=True)
class Box:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DimensionError("box bounds must be vectors of equal length")
        if np.any(hi <= lo) or not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("box bounds must be finite with lower < upper")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def n(self):
        return self.lower.shape[0]

    def contains(self, q) -> bool:
        q = np.asarray(q, dtype=float)
        return bool((q >= self.lower).all() and (q <= self.upper).all())

    def around(self, center, half_width) -> "Box":
        """Intersection of this box with a cube centred at ``center``."""
        c = np.asarray(center, dtype=float)
        return Box(np.maximum(self.lower, c - half_width), np.minimum(self.upper, c + half_width))


def unit_vectors(rng, count, n):
    """``count`` directions drawn uniformly from the unit sphere in R^n."""
    v = rng.standard_normal((count, n))
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return v / norms


@dataclass(frozen=True)
class Sampler:
    """Uniform configurations in ``box``; momenta on the sphere of ``radius``.

    All draws come from a single generator seeded with ``seed``, so a
    sampler with the same fields always yields the same points.
    """

    box: Box
    count: int = 200
    radius: float = 1.0
    seed: int = 0

    def rng(self):
        return np.random.default_rng(self.seed)

    def configurations(self):
        rng = self.rng()
        return self.box.lower + (self.box.upper - self.box.lower) * rng.random((self.count, self.box.n))

    def states(self):
        rng = self.rng()
        n = self.box.n
        q = self.box.lower + (self.box.upper - self.box.lower) * rng.random((self.count, n))
        p = self.radius * unit_vectors(rng, self.count, n)
        return q, p
