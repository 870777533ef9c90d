"""Sliding-window deflickering of a style video against its guide video.

Output frame ``i`` is the mean of every style frame in the window
``[max(0, i-M), min(N-1, i+M)]`` remapped onto frame ``i`` through
NNF(G_j, G_i). Three modes compute it:

* ``balanced``: one estimation per (j, i) pair, O(NM).
* ``fast``: remapping/blending tables over power-of-two frame blocks; the
  estimation count is O(N log N) whatever the window.
* ``accurate``: base-loss fields, then every field is re-fit towards the
  window's mean remapped frame; frames are streamed so only the window is
  resident.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .frameio import FrameCache, Video
from .nnf import LossSpec, MatchConfig
from .remap import BlendAccumulator, accumulate, remap, remap_accumulator
from .schedule import MatchJob, NNFScheduler

MODES = ("fast", "balanced", "accurate")


@dataclass(frozen=True)
class BlendConfig:
    mode: str = "fast"
    window: Optional[int] = 15  # None means the whole video
    alpha: float = 2.0
    match: MatchConfig = field(default_factory=MatchConfig)
    tracking: bool = False
    accurate_rounds: int = 2

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown blend mode {self.mode!r}")
        if self.window is not None and self.window < 0:
            raise ValueError("window must be >= 0")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.accurate_rounds < 1:
            raise ValueError("accurate_rounds must be >= 1")

    def radius(self, n: int) -> int:
        return n if self.window is None else self.window


def window_bounds(i: int, n: int, m: int) -> tuple[int, int]:
    return max(0, i - m), min(n - 1, i + m)


def _frames(v):
    return v.frames if isinstance(v, Video) else v


def _check_pair(guide, style):
    if len(guide) != len(style):
        raise ValueError(f"guide has {len(guide)} frames, style has {len(style)}")
    if len(guide) == 0:
        raise ValueError("empty video")


def _check_dims(guide, style):
    shape = np.shape(guide[0])
    for k, f in enumerate(list(guide) + list(style)):
        if np.shape(f) != shape:
            raise ValueError(f"dimension mismatch at frame {k % len(guide)}")


# ------------------------------------------------------------------ balanced


def _pair_job(key, g_src, g_tgt, s_src, cfg: BlendConfig, init=None, extras=()):
    return MatchJob(key, g_src, g_tgt, LossSpec.guide_style(s_src, alpha=cfg.alpha), cfg.match,
                    init=init, extras=extras)


def blend_balanced(guide, style, cfg: BlendConfig = BlendConfig(mode="balanced"),
                   scheduler: Optional[NNFScheduler] = None) -> Video:
    guide, style = _frames(guide), _frames(style)
    _check_pair(guide, style)
    _check_dims(guide, style)
    n, m = len(style), cfg.radius(len(style))
    if m == 0 or n == 1:
        return Video([np.array(s) for s in style])
    scheduler = scheduler or NNFScheduler()
    out = []
    previous: dict = {}
    for i in range(n):
        lo, hi = window_bounds(i, n, m)
        jobs = []
        for j in range(lo, hi + 1):
            if j == i:
                continue
            prior = previous.get(j) if cfg.tracking else None
            jobs.append(_pair_job((j, i), guide[j], guide[i], style[j], cfg,
                                  init=prior, extras=() if prior is None else (prior,)))
        fields = scheduler.run(jobs)
        acc = BlendAccumulator.zero(np.shape(style[i]))
        for j in range(lo, hi + 1):
            part = style[i] if j == i else remap(style[j], fields[(j, i)], cfg.match.patch_radius)
            acc = accumulate(acc, BlendAccumulator.of(part))
        out.append(np.clip(acc.mean, 0.0, 1.0))
        if cfg.tracking:
            previous = {j: fields[(j, i)] for j in range(lo, hi + 1) if j != i}
    return Video(out)


# ------------------------------------------------------------------ fast


@dataclass
class _Oriented:
    """Forward view of the frames, or the frame-order mirror of it."""

    guide: Sequence
    style: Sequence
    reversed: bool = False

    def __len__(self):
        return len(self.style)

    def orig(self, k: int) -> int:
        return len(self.style) - 1 - k if self.reversed else k

    def g(self, k):
        return self.guide[self.orig(k)]

    def s(self, k):
        return self.style[self.orig(k)]


@dataclass
class RemappingTable:
    """Cell ``(j, L)``, ``L >= 1``, sums the 2^(L-1) frames just left of the
    block ending at ``j``, each remapped onto frame ``j``. Cell ``(j, 0)`` is S_j."""

    cells: dict
    n: int
    view: _Oriented
    cfg: BlendConfig

    @property
    def reversed(self) -> bool:
        return self.view.reversed


@dataclass
class BlendingTable:
    """Cell ``(i, L)`` holds the 2^L frames ``i-2^L+1 .. i`` remapped onto frame ``i``."""

    cells: dict
    n: int
    view: _Oriented
    cfg: BlendConfig

    @property
    def reversed(self) -> bool:
        return self.view.reversed


def max_level(n: int) -> int:
    return (n - 1).bit_length() if n > 1 else 0


def remapping_table_pairs(n: int):
    """(i, j, L+1) for every estimation the table build performs."""
    pairs = []
    for i in range(n):
        j = i
        for level in range(max_level(n)):
            if i & (1 << level):
                continue
            j |= 1 << level
            if j < n:
                pairs.append((i, j, level + 1))
    return pairs


def _fast_job(view: _Oriented, src: int, dst: int, cfg: BlendConfig) -> MatchJob:
    # destination style frame stands in for S_hat; keyed by original indices
    loss = LossSpec.guide_style(view.s(src), target_style=view.s(dst), alpha=cfg.alpha, refresh=False)
    return MatchJob((view.orig(src), view.orig(dst)), view.g(src), view.g(dst), loss, cfg.match)


def build_remapping_table(guide, style, cfg: BlendConfig = BlendConfig(),
                          scheduler: Optional[NNFScheduler] = None, reversed: bool = False) -> RemappingTable:
    guide, style = _frames(guide), _frames(style)
    _check_pair(guide, style)
    view = _Oriented(guide, style, reversed)
    n = len(view)
    scheduler = scheduler or NNFScheduler(cache=True)
    p = cfg.match.patch_radius
    pairs = remapping_table_pairs(n)
    fields = scheduler.run(_fast_job(view, i, j, cfg) for i, j, _ in pairs)
    cells = {(i, 0): BlendAccumulator.of(view.s(i)) for i in range(n)}
    for i, j, level in pairs:  # ascending i per cell
        part = BlendAccumulator.of(remap(view.s(i), fields[(view.orig(i), view.orig(j))], p))
        cells[(j, level)] = accumulate(cells.get((j, level), BlendAccumulator.zero(part.sum.shape)), part)
    return RemappingTable(cells, n, view, cfg)


def build_blending_table(remapping: RemappingTable) -> BlendingTable:
    cells = {}
    for i in range(remapping.n):
        cells[(i, 0)] = remapping.cells[(i, 0)]
        level = 1
        while (i, level) in remapping.cells:
            cells[(i, level)] = accumulate(cells[(i, level - 1)], remapping.cells[(i, level)])
            level += 1
    return BlendingTable(cells, remapping.n, remapping.view, remapping.cfg)


def query_cells(l: int, r: int) -> list[tuple[int, int]]:
    """Cells (i, L) consumed for the interval [l, r], from r downwards."""
    if not 0 <= l <= r:
        raise ValueError(f"invalid interval [{l}, {r}]")
    cells = []
    i = r
    while i >= l:
        level = 0
        while i & (1 << level) and i - (1 << (level + 1)) + 1 >= l:
            level += 1
        cells.append((i, level))
        i -= 1 << level
    return cells


def query_blending_table(table: BlendingTable, l: int, r: int,
                         scheduler: Optional[NNFScheduler] = None,
                         cells_for: Callable = query_cells) -> BlendAccumulator:
    """Sum of frames ``l..r`` remapped onto frame ``r`` (indices in the table's orientation).

    The returned accumulator carries ``count == r - l + 1``; its mean is the
    interval average.
    """
    if not 0 <= l <= r < table.n:
        raise ValueError(f"invalid interval [{l}, {r}] for {table.n} frames")
    scheduler = scheduler or NNFScheduler(cache=True)
    view, cfg = table.view, table.cfg
    cells = cells_for(l, r)
    fields = scheduler.run(_fast_job(view, i, r, cfg) for i, _ in cells if i != r)
    acc = BlendAccumulator.zero(np.shape(view.s(r)))
    for i, level in cells:
        cell = table.cells[(i, level)]
        if i != r:
            cell = remap_accumulator(cell, fields[(view.orig(i), view.orig(r))], cfg.match.patch_radius)
        acc = accumulate(acc, cell)
    return acc


@dataclass
class FastTables:
    forward: BlendingTable
    backward: BlendingTable


def build_fast_tables(guide, style, cfg: BlendConfig, scheduler: NNFScheduler) -> FastTables:
    fwd = build_blending_table(build_remapping_table(guide, style, cfg, scheduler))
    bwd = build_blending_table(build_remapping_table(guide, style, cfg, scheduler, reversed=True))
    return FastTables(fwd, bwd)


def fast_window_sum(tables: FastTables, i: int, m: int, scheduler: NNFScheduler,
                    cells_for: Callable = query_cells) -> BlendAccumulator:
    """Window sum for frame ``i`` as (frames up to i) + (frames from i) - S_i."""
    n = tables.forward.n
    lo, hi = window_bounds(i, n, m)
    upto = query_blending_table(tables.forward, lo, i, scheduler, cells_for)
    ri = n - 1 - i
    from_i = query_blending_table(tables.backward, n - 1 - hi, ri, scheduler, cells_for)
    center = tables.forward.view.s(i)
    return BlendAccumulator(upto.sum + from_i.sum - center, upto.count + from_i.count - 1)


def blend_fast(guide, style, cfg: BlendConfig = BlendConfig(mode="fast"),
               scheduler: Optional[NNFScheduler] = None, cells_for: Callable = query_cells) -> Video:
    guide, style = _frames(guide), _frames(style)
    _check_pair(guide, style)
    _check_dims(guide, style)
    n, m = len(style), cfg.radius(len(style))
    if m == 0 or n == 1:
        return Video([np.array(s) for s in style])
    scheduler = scheduler or NNFScheduler(cache=True)
    tables = build_fast_tables(guide, style, cfg, scheduler)
    return Video([np.clip(fast_window_sum(tables, i, m, scheduler, cells_for).mean, 0.0, 1.0) for i in range(n)])


# ------------------------------------------------------------------ accurate


def blend_accurate(guide, style, cfg: BlendConfig = BlendConfig(mode="accurate"),
                   scheduler: Optional[NNFScheduler] = None,
                   sink: Optional[Callable[[int, np.ndarray], None]] = None,
                   stats: Optional[dict] = None) -> Optional[Video]:
    """Render frames one at a time holding at most the window's frames.

    ``guide`` and ``style`` may be lazy sequences; frames are fetched through
    a bounded :class:`FrameCache`. Frames are passed to ``sink`` as they are
    finished; without a sink they are collected and returned.
    """
    _check_pair(guide, style)
    n, m = len(style), cfg.radius(len(style))
    scheduler = scheduler or NNFScheduler()
    p = cfg.match.patch_radius
    cache = FrameCache(lambda k: (np.asarray(guide[k], dtype=np.float64), np.asarray(style[k], dtype=np.float64)),
                       capacity=min(n, 2 * m + 1))
    collected = [] if sink is None else None
    shape = None
    for i in range(n):
        lo, hi = window_bounds(i, n, m)
        cache.retain(range(lo, hi + 1))
        win = {j: cache.get(j) for j in range(lo, hi + 1)}
        if shape is None:
            shape = win[i][0].shape
        for j, (g, s) in win.items():
            if g.shape != shape or s.shape != shape:
                raise ValueError(f"dimension mismatch at frame {j}")
        g_i, s_i = win[i]
        others = [j for j in win if j != i]
        if others:
            # base-loss warm start, then re-fit towards the window mean
            fields = scheduler.run(MatchJob((j, i, 0), win[j][0], g_i, LossSpec("base"), cfg.match) for j in others)
            fields = {j: fields[(j, i, 0)] for j in others}
            for rnd in range(1, cfg.accurate_rounds):
                mean = _window_mean(win, i, fields, p)
                jobs = [MatchJob((j, i, rnd), win[j][0], g_i,
                                 LossSpec.average_align(mean, source_style=win[j][1], alpha=cfg.alpha),
                                 cfg.match, init=fields[j]) for j in others]
                res = scheduler.run(jobs)
                fields = {j: res[(j, i, rnd)] for j in others}
            frame = _window_mean(win, i, fields, p)
        else:
            frame = np.array(s_i)
        if sink is None:
            collected.append(frame)
        else:
            sink(i, frame)
    if stats is not None:
        stats["peak_frames_resident"] = cache.peak
        stats["frame_loads"] = cache.loads
    return Video(collected) if sink is None else None


def _window_mean(win, i, fields, p):
    acc = BlendAccumulator.zero(win[i][1].shape)
    for j in sorted(win):
        part = win[i][1] if j == i else remap(win[j][1], fields[j], p)
        acc = accumulate(acc, BlendAccumulator.of(part))
    return np.clip(acc.mean, 0.0, 1.0)


def blend(guide, style, cfg: BlendConfig = BlendConfig(), scheduler: Optional[NNFScheduler] = None, **kw):
    if cfg.mode == "fast":
        return blend_fast(guide, style, cfg, scheduler or NNFScheduler(cache=True), **kw)
    if cfg.mode == "balanced":
        return blend_balanced(guide, style, cfg, scheduler, **kw)
    return blend_accurate(guide, style, cfg, scheduler, **kw)
