"""Nearest-neighbor field estimation.

A parallel PatchMatch: every pixel is updated independently from a frozen
snapshot of the field, coarse to fine over an image pyramid. An NNF is an
``(h, w, 2)`` int32 array over the *target*; ``F[x, y] = (sx, sy)`` indexes
the source image.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import kernels, rng
from .remap import remap

LOSS_KINDS = ("base", "guide-style", "average-align", "pairwise-align")

# RNG stream tags keep init draws and per-step search draws apart.
_TAG_INIT = 1
_TAG_SEARCH = 2

_PROPAGATION = ((-1, 0), (1, 0), (0, -1), (0, 1))


class MatchError(ValueError):
    pass


@dataclass(frozen=True)
class MatchConfig:
    patch_radius: int = 3
    iterations: int = 10
    pyramid_min_side: int = 32
    rng_seed: int = 0
    search_candidates: int = 1

    def __post_init__(self):
        if self.patch_radius < 1:
            raise ValueError("patch_radius must be >= 1")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.pyramid_min_side < 2 * self.patch_radius + 1:
            raise ValueError("pyramid_min_side must be >= 2 * patch_radius + 1")
        if self.search_candidates < 1:
            raise ValueError("search_candidates must be >= 1")
        if not 0 <= self.rng_seed < 2**64:
            raise ValueError("rng_seed must be an unsigned 64-bit integer")


@dataclass(frozen=True, eq=False)
class LossSpec:
    """Which patch distance to minimize, plus the frames it needs.

    ``base``            d(S[F], T)
    ``guide-style``     alpha d(G_src[F], G_tgt) + d(S_src[F], S_hat), where with
                        ``refresh`` S_hat is re-rendered as remap(S_src, F) at the
                        start of every iteration, else it is ``target_style``.
    ``average-align``   alpha d(src[F], tgt) + d(S_src[F], T_mean), T_mean fixed.
    ``pairwise-align``  alpha d(src[F], tgt) + d(S_src[F], S_other[F_other]).
    """

    kind: str = "base"
    alpha: float = 2.0
    source_style: Optional[np.ndarray] = None
    target_style: Optional[np.ndarray] = None
    counterpart_source: Optional[np.ndarray] = None
    counterpart_nnf: Optional[np.ndarray] = None
    refresh: bool = True

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if not self.alpha >= 0:
            raise ValueError("alpha must be >= 0")
        if self.kind == "guide-style" and self.source_style is None:
            raise ValueError("guide-style loss needs source_style")
        if self.kind == "guide-style" and not self.refresh and self.target_style is None:
            raise ValueError("guide-style loss without refresh needs target_style")
        if self.kind == "average-align" and self.target_style is None:
            raise ValueError("average-align loss needs the mean remapped frame")
        if self.kind == "pairwise-align" and (self.counterpart_source is None or self.counterpart_nnf is None):
            raise ValueError("pairwise-align loss needs counterpart_source and counterpart_nnf")

    @classmethod
    def guide_style(cls, source_style, target_style=None, alpha=2.0, refresh=True):
        return cls("guide-style", alpha, source_style=source_style, target_style=target_style, refresh=refresh)

    @classmethod
    def average_align(cls, mean_frame, source_style=None, alpha=2.0):
        return cls("average-align", alpha, source_style=source_style, target_style=mean_frame)

    @classmethod
    def pairwise_align(cls, counterpart_source, counterpart_nnf, source_style=None, alpha=2.0):
        return cls("pairwise-align", alpha, source_style=source_style,
                   counterpart_source=counterpart_source, counterpart_nnf=counterpart_nnf)

    @property
    def refreshes(self) -> bool:
        return self.kind == "guide-style" and self.refresh


# ---------------------------------------------------------------- field helpers


def clamp_field(f: np.ndarray, source_dims) -> np.ndarray:
    out = np.empty(f.shape, dtype=np.int32)
    np.clip(f[..., 0], 0, source_dims[0] - 1, out=out[..., 0])
    np.clip(f[..., 1], 0, source_dims[1] - 1, out=out[..., 1])
    return out


def identity_nnf(dims) -> np.ndarray:
    xs, ys = np.meshgrid(np.arange(dims[0]), np.arange(dims[1]), indexing="ij")
    return np.stack([xs, ys], axis=-1).astype(np.int32)


def init_random(dims, source_dims, seed: int) -> np.ndarray:
    """Uniform random field over the source bounds, a pure function of ``seed``."""
    xs, ys = rng.pixel_grid(*dims)
    f = np.empty((dims[0], dims[1], 2), dtype=np.int32)
    f[..., 0] = rng.uniform_int(0, source_dims[0], seed, _TAG_INIT, xs, ys, 0)
    f[..., 1] = rng.uniform_int(0, source_dims[1], seed, _TAG_INIT, xs, ys, 1)
    return f


def upsample_nnf(nnf: np.ndarray, new_dims, new_source_dims, source_dims=None) -> np.ndarray:
    """Resample a field onto ``new_dims``.

    Each new cell reads its nearest old cell, scales that match by the source
    size ratio and adds the cell's offset inside the old cell's block, then
    clamps. ``source_dims`` defaults to the field's own dims.
    """
    h, w = nnf.shape[:2]
    hs, ws = source_dims if source_dims is not None else (h, w)
    nh, nw = new_dims
    xs = np.arange(nh)
    ys = np.arange(nw)
    cx = np.minimum(xs * h // nh, h - 1)
    cy = np.minimum(ys * w // nw, w - 1)
    off_x = xs - (cx * nh) // h
    off_y = ys - (cy * nw) // w
    coarse = nnf[cx[:, None], cy[None, :]].astype(np.int64)
    out = np.empty((nh, nw, 2), dtype=np.int64)
    out[..., 0] = (coarse[..., 0] * new_source_dims[0]) // hs + off_x[:, None]
    out[..., 1] = (coarse[..., 1] * new_source_dims[1]) // ws + off_y[None, :]
    return clamp_field(out, new_source_dims)


def halve(frame: np.ndarray) -> np.ndarray:
    """2x area-average downscale; an odd trailing row or column is dropped."""
    h, w = frame.shape[0] // 2, frame.shape[1] // 2
    f = frame[: 2 * h, : 2 * w]
    return 0.25 * (f[0::2, 0::2] + f[1::2, 0::2] + f[0::2, 1::2] + f[1::2, 1::2])


def pyramid_depth(target_dims, source_dims, cfg: MatchConfig) -> int:
    floor_side = max(cfg.pyramid_min_side, 2 * cfg.patch_radius + 1)
    depth = 1
    t, s = tuple(target_dims), tuple(source_dims)
    while True:
        t = (t[0] // 2, t[1] // 2)
        s = (s[0] // 2, s[1] // 2)
        if min(t + s) < floor_side:
            return depth
        depth += 1


def search_radii(source_dims) -> list[int]:
    r = max(source_dims)
    radii = []
    while r >= 1:
        radii.append(r)
        r //= 2
    return radii


# ---------------------------------------------------------------- losses


def patch_error(source, target, candidate, loss: Optional[LossSpec] = None, p: int = 3) -> np.ndarray:
    """Error of every match in ``candidate`` under ``loss`` (sum over taps and channels)."""
    loss = loss or LossSpec()
    source, target = kernels.as_frame(source), kernels.as_frame(target)
    if source.ndim != 3 or target.ndim != 3:
        raise MatchError("frames must be h x w x 3")
    if candidate.shape[:2] != target.shape[:2]:
        raise MatchError(f"NNF dims {candidate.shape[:2]} do not match target {target.shape[:2]}")
    target_style = loss.target_style
    if loss.kind == "guide-style" and target_style is None:
        target_style = remap(loss.source_style, candidate, p)
    return _evaluate(source, target, loss, target_style, candidate, p)


def _evaluate(source, target, loss, target_style, f, p, bound=None, current=None):
    if loss.kind == "base":
        return kernels.patch_error(source, target, f, p, bound=bound, current=current)
    src_style = source if loss.source_style is None else loss.source_style
    if loss.kind in ("guide-style", "average-align"):
        if src_style.shape != source.shape or target_style.shape != target.shape:
            raise MatchError("auxiliary frames must match target dimensions")
        return kernels.patch_error(source, target, f, p, alpha=loss.alpha,
                                   src_aux=src_style, tgt_aux=target_style, bound=bound, current=current)
    other = loss.counterpart_source
    e, _ = kernels.pairwise_error(src_style, other, target, f, loss.counterpart_nnf, p, loss.alpha,
                                  fid_l=source, fid_r=other)
    return e


def pairwise_patch_error(key_l, key_r, target, f_l, f_r, alpha, p: int = 3, guide_l=None, guide_r=None):
    """Both pairwise-alignment error maps.

    ``E_l = alpha d(fid_l[F_l], target) + X`` and ``E_r`` likewise, where
    ``X = d(key_l[F_l], key_r[F_r])`` is shared. The fidelity frames are the
    guides when given, else the keyframes.
    """
    key_l, key_r, target = kernels.as_frame(key_l), kernels.as_frame(key_r), kernels.as_frame(target)
    if not (key_l.shape == key_r.shape == target.shape):
        raise MatchError("pairwise error needs equally sized frames")
    return kernels.pairwise_error(key_l, key_r, target, f_l, f_r, p, alpha, fid_l=guide_l, fid_r=guide_r)


def cross_energy(key_l, key_r, f_l, f_r, p: int = 3) -> float:
    """Total disagreement sum_xy d(key_l[F_l], key_r[F_r])."""
    e, _ = kernels.pairwise_error(key_l, key_r, key_l, f_l, f_r, p, 0.0)
    return float(e.sum())


# ---------------------------------------------------------------- estimation


@dataclass
class _Level:
    index: int
    source: np.ndarray
    target: np.ndarray
    source_style: Optional[np.ndarray]
    target_style: Optional[np.ndarray]
    counterpart: Optional[np.ndarray]
    counterpart_nnf: Optional[np.ndarray]

    @property
    def dims(self):
        return self.target.shape[:2]

    @property
    def source_dims(self):
        return self.source.shape[:2]


def _levels(source, target, loss: LossSpec, cfg: MatchConfig, depth: int) -> list[_Level]:
    def chain(frame):
        if frame is None:
            return [None] * depth
        out = [frame]
        for _ in range(depth - 1):
            out.append(halve(out[-1]))
        return out

    src, tgt = chain(source), chain(target)
    sst, tst = chain(loss.source_style), chain(loss.target_style)
    other = chain(loss.counterpart_source)
    levels = []
    for k in range(depth):
        cnnf = None
        if loss.counterpart_nnf is not None:
            cnnf = loss.counterpart_nnf
            if k:
                cnnf = upsample_nnf(cnnf, tgt[k].shape[:2], other[k].shape[:2], other[0].shape[:2])
        levels.append(_Level(depth - 1 - k, src[k], tgt[k], sst[k], tst[k], other[k], cnnf))
    return levels[::-1]


def _updating_sequence(f, level: _Level, cfg: MatchConfig, iteration: int, extras):
    """Yield (step, candidate field) in the order they are tried."""
    sdims = level.source_dims
    h, w = level.dims
    step = 0
    for extra in extras:
        yield step, extra
        step += 1
    xs = np.arange(h)
    ys = np.arange(w)
    for dx, dy in _PROPAGATION:
        nx = np.clip(xs + dx, 0, h - 1)
        ny = np.clip(ys + dy, 0, w - 1)
        cand = f[nx[:, None], ny[None, :]].astype(np.int64)
        cand[..., 0] -= dx
        cand[..., 1] -= dy
        yield step, clamp_field(cand, sdims)
        step += 1
    gx, gy = xs[:, None], ys[None, :]
    for k, r in enumerate(search_radii(sdims)):
        for c in range(cfg.search_candidates):
            key = (cfg.rng_seed, _TAG_SEARCH, level.index, iteration, k, c, gx, gy)
            cand = f.astype(np.int64)
            cand[..., 0] += rng.uniform_int(-r, r + 1, *key, 0)
            cand[..., 1] += rng.uniform_int(-r, r + 1, *key, 1)
            yield step, clamp_field(cand, sdims)
            step += 1


def _loss_at(level: _Level, loss: LossSpec) -> LossSpec:
    return replace(loss, source_style=level.source_style, target_style=level.target_style,
                   counterpart_source=level.counterpart, counterpart_nnf=level.counterpart_nnf)


def optimize_level(f, level: _Level, loss: LossSpec, cfg: MatchConfig, iterations: int,
                   extras=(), observer=None, first_iteration: int = 0):
    """Run ``iterations`` PatchMatch iterations on one pyramid level; returns (F, E)."""
    p = cfg.patch_radius
    lloss = _loss_at(level, loss)
    e = None
    for it in range(first_iteration, first_iteration + iterations):
        if lloss.refreshes:
            level.target_style = remap(level.source_style, f, p)
            lloss = _loss_at(level, loss)
            e = None
        if e is None:
            e = _evaluate(level.source, level.target, lloss, level.target_style, f, p)
        for step, cand in _updating_sequence(f, level, cfg, it, extras):
            # pruned values are exact wherever they beat e
            e_new = _evaluate(level.source, level.target, lloss, level.target_style, cand, p, e, f)
            better = e_new < e
            if observer is not None:
                observer(level=level.index, iteration=it, step=step, before=e, after=np.where(better, e_new, e),
                         field=np.where(better[..., None], cand, f), source_dims=level.source_dims)
            f = np.where(better[..., None], cand, f).astype(np.int32)
            e = np.where(better, e_new, e)
    if e is None:
        e = _evaluate(level.source, level.target, lloss, level.target_style, f, p)
    return f, e


def _check_pair(source, target, p):
    for name, img in (("source", source), ("target", target)):
        if img.ndim != 3 or img.shape[2] != 3:
            raise MatchError(f"{name} must be h x w x 3")
        if min(img.shape[:2]) < 2 * p + 1:
            raise MatchError(f"{name} image {img.shape[:2]} smaller than patch ({2 * p + 1})")


def estimate_nnf(source, target, loss: Optional[LossSpec] = None, cfg: Optional[MatchConfig] = None, *,
                 init: Optional[np.ndarray] = None, extra_candidates: Sequence[np.ndarray] = (),
                 observer: Optional[Callable] = None):
    """Estimate NNF(source, target); returns ``(F, E)`` at full resolution.

    Without ``init`` the field starts random at the coarsest pyramid level.
    With ``init`` (a full-resolution warm start) only the finest level is
    optimized. ``extra_candidates`` are whole fields tried in every iteration
    before propagation. ``observer`` sees every update step.
    """
    loss = loss or LossSpec()
    cfg = cfg or MatchConfig()
    source, target = kernels.as_frame(source), kernels.as_frame(target)
    p = cfg.patch_radius
    _check_pair(source, target, p)
    tdims, sdims = target.shape[:2], source.shape[:2]
    depth = 1 if init is not None else pyramid_depth(tdims, sdims, cfg)
    levels = _levels(source, target, loss, cfg, depth)
    if init is not None:
        if init.shape != (tdims[0], tdims[1], 2):
            raise MatchError(f"warm start dims {init.shape[:2]} do not match target {tdims}")
        f = clamp_field(init, sdims)
    else:
        f = init_random(levels[0].dims, levels[0].source_dims, cfg.rng_seed)
    prev_sdims = levels[0].source_dims
    e = None
    for level in levels:
        f = upsample_nnf(f, level.dims, level.source_dims, prev_sdims)
        prev_sdims = level.source_dims
        extras = [upsample_nnf(clamp_field(x, sdims), level.dims, level.source_dims, sdims)
                  for x in extra_candidates]
        f, e = optimize_level(f, level, loss, cfg, cfg.iterations, extras, observer)
    return f, e


def estimate_nnf_batch(pairs, cfg: Optional[MatchConfig] = None, workers: int = 1):
    """Independent estimations; pair ``i`` uses seed ``cfg.rng_seed ^ i``."""
    cfg = cfg or MatchConfig()
    pairs = list(pairs)
    if not pairs:
        return []
    shape = np.shape(pairs[0][1])
    for src, tgt, _ in pairs:
        if np.shape(src) != np.shape(pairs[0][0]) or np.shape(tgt) != shape:
            raise MatchError("dimension mismatch within batch")

    def run(i):
        src, tgt, loss = pairs[i]
        return estimate_nnf(src, tgt, loss, replace(cfg, rng_seed=cfg.rng_seed ^ i))

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            return list(ex.map(run, range(len(pairs))))
    return [run(i) for i in range(len(pairs))]


def refine_nnf(source, target, loss: LossSpec, cfg: MatchConfig, init: np.ndarray, iterations: int = 1,
               first_iteration: int = 0, extra_candidates: Sequence[np.ndarray] = (),
               observer: Optional[Callable] = None):
    """Continue optimizing ``init`` at full resolution for a few iterations; returns (F, E).

    ``first_iteration`` offsets the RNG stream so successive calls draw fresh
    search offsets.
    """
    source, target = kernels.as_frame(source), kernels.as_frame(target)
    _check_pair(source, target, cfg.patch_radius)
    level = _levels(source, target, loss, cfg, 1)[0]
    f = clamp_field(init, level.source_dims)
    return optimize_level(f, level, loss, cfg, iterations, list(extra_candidates), observer, first_iteration)
