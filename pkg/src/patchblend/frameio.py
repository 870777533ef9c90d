"""Numbered PNG sequences in and out.

Frames are ``(h, w, 3)`` float64 arrays in [0, 1], decoded from 8-bit RGB as
``x / 255`` without gamma handling. Files are 1-based (``0001.png``); indices
inside the package are 0-based.
"""
from __future__ import annotations

import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator, Sequence

import numpy as np
from PIL import Image

DEFAULT_PATTERN = "%04d.png"


class SequenceError(ValueError):
    """A frame directory that cannot be read as one uniform video."""


@dataclass
class Video:
    frames: list[np.ndarray]
    role: str = "style"

    def __post_init__(self):
        if not self.frames:
            raise SequenceError("a video needs at least one frame")
        self.frames = [check_frame(f) for f in self.frames]
        shape = self.frames[0].shape
        for i, f in enumerate(self.frames):
            if f.shape != shape:
                raise SequenceError(f"mixed dimensions: frame {i} is {f.shape[:2]}, expected {shape[:2]}")
        if self.role not in ("guide", "style"):
            raise ValueError(f"unknown role {self.role!r}")

    def __len__(self) -> int:
        return len(self.frames)

    def __getitem__(self, i):
        return self.frames[i]

    def __iter__(self) -> Iterator[np.ndarray]:
        return iter(self.frames)

    @property
    def shape(self) -> tuple[int, int]:
        return self.frames[0].shape[:2]


def check_frame(frame) -> np.ndarray:
    a = np.ascontiguousarray(frame, dtype=np.float64)
    if a.ndim != 3 or a.shape[2] != 3 or a.shape[0] < 1 or a.shape[1] < 1:
        raise SequenceError(f"frame must be h x w x 3, got {a.shape}")
    if not np.isfinite(a).all() or a.min() < 0.0 or a.max() > 1.0:
        raise SequenceError("frame intensities must lie in [0, 1]")
    return a


def _pattern_regex(pattern: str) -> re.Pattern:
    m = re.search(r"%0?(\d*)d", pattern)
    if m is None:
        raise ValueError(f"pattern {pattern!r} has no integer field")
    width = m.group(1)
    digits = rf"(\d{{{width},}})" if width else r"(\d+)"
    return re.compile(re.escape(pattern[: m.start()]) + digits + re.escape(pattern[m.end():]) + r"\Z")


def decode_png(path) -> np.ndarray:
    try:
        with Image.open(path) as im:
            rgb = np.asarray(im.convert("RGB"), dtype=np.uint8)
    except (OSError, ValueError) as exc:
        raise SequenceError(f"undecodable image {path}: {exc}") from exc
    return rgb.astype(np.float64) / 255.0


def encode_frame(frame: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(np.asarray(frame) * 255.0), 0, 255).astype(np.uint8)


def list_sequence(directory, pattern: str = DEFAULT_PATTERN) -> list[Path]:
    """Matching files ordered by index; raises on gaps or an empty match."""
    d = Path(directory)
    if not d.is_dir():
        raise SequenceError(f"missing directory {d}")
    rx = _pattern_regex(pattern)
    found = {}
    for name in os.listdir(d):
        m = rx.match(name)
        if m:
            idx = int(m.group(1))
            if idx in found:
                raise SequenceError(f"duplicate frame index {idx} in {d}")
            found[idx] = d / name
    if not found:
        raise SequenceError(f"no files matching {pattern!r} in {d}")
    indices = sorted(found)
    if indices[-1] - indices[0] + 1 != len(indices):
        raise SequenceError(f"non-contiguous frame indices in {d}")
    return [found[i] for i in indices]


def load_sequence(directory, pattern: str = DEFAULT_PATTERN, role: str = "style", workers: int = 1) -> Video:
    paths = list_sequence(directory, pattern)
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            frames = list(ex.map(decode_png, paths))
    else:
        frames = [decode_png(p) for p in paths]
    return Video(frames, role)


def save_frame(frame: np.ndarray, path) -> None:
    Image.fromarray(encode_frame(frame), mode="RGB").save(path)


def save_sequence(video, directory, pattern: str = DEFAULT_PATTERN) -> list[Path]:
    d = Path(directory)
    try:
        d.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise SequenceError(f"unwritable path {d}: {exc}") from exc
    written = []
    for i, frame in enumerate(video):
        path = d / (pattern % (i + 1))
        try:
            save_frame(frame, path)
        except OSError as exc:
            raise SequenceError(f"unwritable path {path}: {exc}") from exc
        written.append(path)
    return written


@dataclass
class FrameCache:
    """Bounded index -> item cache that records how many items were ever resident at once.

    ``loader(i)`` produces item ``i`` on a miss. Items outside the caller's
    window are dropped with :meth:`retain`.
    """

    loader: Callable[[int], object]
    capacity: int
    _items: dict = field(default_factory=dict)
    peak: int = 0
    loads: int = 0

    def get(self, i: int):
        if i not in self._items:
            if len(self._items) >= self.capacity:
                raise MemoryError(f"frame cache over capacity ({self.capacity}) loading index {i}")
            self._items[i] = self.loader(i)
            self.loads += 1
            self.peak = max(self.peak, len(self._items))
        return self._items[i]

    def retain(self, keep: Sequence[int]) -> None:
        keep = set(keep)
        for k in [k for k in self._items if k not in keep]:
            del self._items[k]

    def __len__(self) -> int:
        return len(self._items)


class LazySequence:
    """Frames of a numbered directory decoded on demand."""

    def __init__(self, directory, pattern: str = DEFAULT_PATTERN, role: str = "style"):
        self.paths = list_sequence(directory, pattern)
        self.role = role
        first = decode_png(self.paths[0])
        self._shape = first.shape[:2]

    def __len__(self) -> int:
        return len(self.paths)

    def __getitem__(self, i: int) -> np.ndarray:
        f = decode_png(self.paths[i])
        if f.shape[:2] != self._shape:
            raise SequenceError(f"mixed dimensions: {self.paths[i]} is {f.shape[:2]}, expected {self._shape}")
        return f

    @property
    def shape(self) -> tuple[int, int]:
        return self._shape
