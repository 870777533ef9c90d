"""Synthetic scenes with known ground truth, for tests, the selftest and benchmarks."""
from __future__ import annotations

import numpy as np


def texture(h: int, w: int, seed: int = 0, lo: float = 0.0, hi: float = 1.0, smooth: int = 0) -> np.ndarray:
    """Uniform noise in [lo, hi], optionally box-blurred ``smooth`` times (then rescaled)."""
    rng = np.random.default_rng(seed)
    img = rng.random((h, w, 3))
    for _ in range(smooth):
        img = (img + np.roll(img, 1, 0) + np.roll(img, -1, 0) + np.roll(img, 1, 1) + np.roll(img, -1, 1)) / 5
    if smooth:
        img = (img - img.min()) / max(img.max() - img.min(), 1e-12)
    return lo + (hi - lo) * img


def static_video(n: int, h: int, w: int, seed: int = 0) -> list[np.ndarray]:
    frame = texture(h, w, seed, 0.1, 0.9)
    return [frame.copy() for _ in range(n)]


def flicker(frames, amplitude: float, seed: int = 1) -> list[np.ndarray]:
    """Independent uniform noise in [-amplitude, amplitude] per frame and pixel, clipped to [0, 1]."""
    rng = np.random.default_rng(seed)
    return [np.clip(f + rng.uniform(-amplitude, amplitude, f.shape), 0.0, 1.0) for f in frames]


def moving_square(n: int, size: int = 64, side: int = 16, start=(12, 8), step=(1, 1), seed: int = 0):
    """Guide frames of a textured square translating over a textured background.

    Returns ``(frames, corners)``; ``corners[t]`` is the square's top-left at frame t.
    """
    bg = texture(size, size, seed, 0.0, 0.5)
    sq = texture(side, side, seed + 1, 0.5, 1.0)
    frames, corners = [], []
    for t in range(n):
        x, y = start[0] + step[0] * t, start[1] + step[1] * t
        f = bg.copy()
        f[x:x + side, y:y + side] = sq
        frames.append(f)
        corners.append((x, y))
    return frames, corners


def recolor(frame: np.ndarray, corner, side: int, color) -> np.ndarray:
    out = frame.copy()
    x, y = corner
    out[x:x + side, y:y + side] = np.asarray(color, dtype=np.float64)
    return out


def ghost_pair(size: int = 48, seed: int = 0):
    """Two styled keyframes on one background, each with its own extra object.

    Returns ``(guide, key_l, key_r, background)``: the guide is a low-contrast
    texture shared by both keyframes and the in-between frame.
    """
    guide = texture(size, size, seed, 0.45, 0.55)
    background = texture(size, size, seed + 5, 0.3, 0.4, smooth=2)
    key_l = background.copy()
    key_r = background.copy()
    key_l[8:18, 8:18] = (0.95, 0.1, 0.1)
    key_r[size - 18:size - 8, size - 20:size - 10] = (0.1, 0.1, 0.95)
    return guide, key_l, key_r, background
