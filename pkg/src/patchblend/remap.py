"""Patch remapping and the additive accumulators used by the blending tables."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels


def remap(source: np.ndarray, nnf: np.ndarray, p: int) -> np.ndarray:
    """Rebuild a target-shaped frame from ``source`` patches placed by ``nnf``.

    Output pixel ``(x, y)`` averages, over every neighbor ``n`` in its
    ``(2p+1)^2`` window (coordinates clamped to the image), the source pixel
    that ``n``'s matched patch puts at ``(x, y)``: ``source(F(n) - (n - (x, y)))``.
    The divisor is always ``(2p+1)^2``. Only the output frame is allocated.
    """
    return kernels.remap(source, nnf, p)


@dataclass(frozen=True)
class BlendAccumulator:
    """A sum of ``count`` frames. ``count == 0`` is the additive identity."""

    sum: np.ndarray
    count: int

    @classmethod
    def of(cls, frame: np.ndarray) -> "BlendAccumulator":
        return cls(np.array(frame, dtype=np.float64), 1)

    @classmethod
    def zero(cls, shape) -> "BlendAccumulator":
        return cls(np.zeros(tuple(shape[:2]) + (3,)), 0)

    @property
    def mean(self) -> np.ndarray:
        if self.count < 1:
            raise ValueError("empty accumulator has no mean")
        return self.sum / self.count

    def __add__(self, other: "BlendAccumulator") -> "BlendAccumulator":
        return accumulate(self, other)


def accumulate(a: BlendAccumulator, b: BlendAccumulator) -> BlendAccumulator:
    if a.sum.shape != b.sum.shape:
        raise ValueError(f"accumulator shapes differ: {a.sum.shape} vs {b.sum.shape}")
    if a.count == 0:
        return b
    if b.count == 0:
        return a
    return BlendAccumulator(a.sum + b.sum, a.count + b.count)


def remap_accumulator(acc: BlendAccumulator, nnf: np.ndarray, p: int) -> BlendAccumulator:
    """Remap the mean and scale back by the count, so the count is preserved."""
    if acc.count == 0:
        return BlendAccumulator.zero(nnf.shape)
    if acc.count == 1:
        return BlendAccumulator(remap(acc.sum, nnf, p), 1)
    return BlendAccumulator(remap(acc.sum / acc.count, nnf, p) * acc.count, acc.count)
