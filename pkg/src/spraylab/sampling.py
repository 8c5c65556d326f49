"""Seeded structured sampling of chart points and tangent vectors.

Sample sets are grouped: a handful of base points x, and for each base 2n
tangent vectors y.  The grouping matters downstream (several procedures fit
x-dependent quantities from the y-spread at a fixed base), so the groups are
kept explicit instead of flattening everything into one cloud.

Rejection is caller-driven: an `accept` callback sees each candidate point
(x followed by y, one flat vector) and can veto it, typically because a guard
expression is nonpositive or a jet probe raised DomainError.  The attempt
budget is 10x the number of accepted draws needed; running out raises
SamplingError rather than silently thinning the sample.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from .errors import SamplingError

# y vectors with all components this small are rejected outright: every
# spray here is positively 2-homogeneous, so near the zero section values
# vanish quadratically and residual scales become meaningless.
Y_FLOOR = 1e-2


@dataclass(frozen=True)
class Tolerances:
    """Shared numeric slack for identity residuals and rank decisions."""

    abs: float = 1e-8
    rel: float = 1e-6
    rank: float = 1e-6
    fd_step: float = 1e-3

    def zero(self, r: float, scale: float = 0.0) -> bool:
        return abs(r) <= self.abs + self.rel * abs(scale)


TOL = Tolerances()


@dataclass(frozen=True)
class SampleBox:
    x_lo: float = -0.8
    x_hi: float = 0.8
    y_lo: float = -1.0
    y_hi: float = 1.0

    @classmethod
    def from_hint(cls, hint: dict | None) -> "SampleBox":
        """Build from a fixture hint like {"x": [lo, hi], "y": [lo, hi]}."""
        if not hint:
            return cls()
        x = hint.get("x", (-0.8, 0.8))
        y = hint.get("y", (-1.0, 1.0))
        return cls(float(x[0]), float(x[1]), float(y[0]), float(y[1]))


class SampleSet:
    """Accepted sample points, grouped as bases x tangents."""

    def __init__(self, bases: np.ndarray, ys: np.ndarray):
        self.bases = bases  # (nb, n)
        self.ys = ys  # (nb, m, n)

    @property
    def count(self) -> int:
        return self.bases.shape[0] * self.ys.shape[1]

    def grouped(self) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        for b in range(self.bases.shape[0]):
            yield self.bases[b], self.ys[b]

    def points(self) -> np.ndarray:
        """All samples flattened to rows (x1..xn, y1..yn)."""
        nb, m, n = self.ys.shape
        xs = np.repeat(self.bases, m, axis=0)
        return np.concatenate([xs, self.ys.reshape(nb * m, n)], axis=1)


def sample_points(
    dim: int,
    count: int = 64,
    seed: int = 7,
    box: SampleBox | None = None,
    accept: Callable[[np.ndarray], bool] | None = None,
) -> SampleSet:
    """Draw ~`count` admissible points as ceil(count/2n) bases x 2n tangents.

    Deterministic for a fixed (dim, count, seed, box): the candidate stream
    comes from one PCG64 generator and rejection only consumes it.
    """
    if count < 1:
        raise SamplingError("sample count must be at least 1")
    box = box or SampleBox()
    rng = np.random.default_rng(seed)
    m = 2 * dim
    nb = -(-count // m)
    budget = 10 * (nb + nb * m)

    def ok(pt: np.ndarray) -> bool:
        if np.max(np.abs(pt[dim:])) < Y_FLOOR:
            return False
        if accept is not None:
            try:
                return bool(accept(pt))
            except Exception:
                return False
        return True

    bases = np.empty((nb, dim))
    ys = np.empty((nb, m, dim))
    b = 0
    while b < nb:
        if budget <= 0:
            raise SamplingError(
                f"sampling exhausted after rejections: {b}/{nb} base groups filled"
            )
        budget -= 1
        x = rng.uniform(box.x_lo, box.x_hi, size=dim)
        group = np.empty((m, dim))
        k = 0
        # a base whose guard region excludes most tangents (or all of them,
        # when the guard constrains x alone) must not drain the whole budget;
        # give it a bounded number of tries, then redraw the base
        tries = 10 * m
        while k < m and tries > 0 and budget > 0:
            tries -= 1
            budget -= 1
            y = rng.uniform(box.y_lo, box.y_hi, size=dim)
            if ok(np.concatenate([x, y])):
                group[k] = y
                k += 1
        if k == m:
            bases[b] = x
            ys[b] = group
            b += 1
    return SampleSet(bases, ys)
