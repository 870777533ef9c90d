"""Render a whole guide video from a few styled keyframes.

Frames between two keyframes ``l < i < r`` are the linear mix
``((r-i) (S_l -> i) + (i-l) (S_r -> i)) / (r-l)``; frames outside the keyframe
span come from the nearest keyframe alone. Keyframes are copied verbatim.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .frameio import Video, check_frame
from .nnf import LossSpec, MatchConfig, cross_energy, estimate_nnf, refine_nnf
from .remap import remap
from .schedule import job_seed

_TAG_TRACK = 11
_TAG_ALIGN = 12
_TAG_PLAIN = 13


@dataclass(frozen=True)
class InterpConfig:
    tracking: bool = True
    alignment: Optional[bool] = None  # None: on iff there are two or more keyframes
    alpha: float = 2.0
    match: MatchConfig = field(default_factory=MatchConfig)

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")

    def aligns(self, n_keys: int) -> bool:
        return n_keys >= 2 if self.alignment is None else self.alignment


class KeyframeSet:
    """Styled frames at strictly increasing guide indices."""

    def __init__(self, entries, n_frames: Optional[int] = None, shape=None):
        entries = [(int(i), check_frame(f)) for i, f in entries]
        if not entries:
            raise ValueError("at least one keyframe is required")
        idx = [i for i, _ in entries]
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("keyframe indices must be strictly increasing")
        if n_frames is not None and (idx[0] < 0 or idx[-1] >= n_frames):
            raise ValueError("keyframe index out of range")
        if shape is not None:
            for i, f in entries:
                if f.shape[:2] != tuple(shape):
                    raise ValueError(f"keyframe {i} is {f.shape[:2]}, guide is {tuple(shape)}")
        self.entries = entries

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def indices(self) -> list[int]:
        return [i for i, _ in self.entries]


def mix_weights(i: int, l: int, r: int) -> tuple[float, float]:
    return (r - i) / (r - l), (i - l) / (r - l)


def _loss(cfg: InterpConfig, source_style):
    if source_style is None:
        return LossSpec("base")
    return LossSpec.guide_style(source_style, alpha=cfg.alpha)


def tracked_nnf_sequence(source_guide, targets: Sequence[np.ndarray], cfg: InterpConfig = InterpConfig(),
                         source_style=None, stats: Optional[dict] = None) -> list[np.ndarray]:
    """NNF(source, T_t) for consecutive targets, each fed its temporal neighbors.

    The first field starts random; every later one warm-starts from its
    predecessor and tries it as a whole-field candidate. A backward pass then
    refits each field with both neighbors as candidates.
    """
    if len(targets) == 0:
        raise ValueError("no targets")
    loss = _loss(cfg, source_style)
    seed = cfg.match.rng_seed

    def est(t, sweep, init=None, extras=()):
        if stats is not None:
            stats["nnf_count"] = stats.get("nnf_count", 0) + 1
        c = cfg.match
        if (t, sweep) != (0, 0):
            c = replace(c, rng_seed=job_seed(seed, (_TAG_TRACK, t, sweep)))
        return estimate_nnf(source_guide, targets[t], loss, c, init=init, extra_candidates=extras)[0]

    fields = [est(0, 0)]
    for t in range(1, len(targets)):
        fields.append(est(t, 0, fields[t - 1], (fields[t - 1],)))
    if len(targets) == 1:
        return fields
    second = list(fields)
    for t in range(len(targets) - 1, -1, -1):
        nbrs = []
        if t > 0:
            nbrs.append(fields[t - 1])
        if t < len(targets) - 1:
            nbrs.append(second[t + 1])
        second[t] = est(t, 1, fields[t], tuple(nbrs))
    return second


def aligned_pair_nnfs(key_l, key_r, guide_l, guide_r, guide_i, cfg: InterpConfig = InterpConfig(),
                      init_l=None, init_r=None, observer=None, stats: Optional[dict] = None):
    """Jointly fit NNF(G_l, G_i) and NNF(G_r, G_i) so the two keyframes' patches agree.

    Each round updates F_l with F_r frozen, then F_r with F_l frozen. Fields
    start from independent base-loss estimates unless given.
    """
    m = cfg.match
    if init_l is None or init_r is None:
        base = replace(m, rng_seed=job_seed(m.rng_seed, (_TAG_ALIGN,)))
        if init_l is None:
            init_l = estimate_nnf(guide_l, guide_i, LossSpec("base"), base)[0]
        if init_r is None:
            init_r = estimate_nnf(guide_r, guide_i, LossSpec("base"), base)[0]
        if stats is not None:
            stats["nnf_count"] = stats.get("nnf_count", 0) + 2
    f_l, f_r = init_l, init_r
    for it in range(m.iterations):
        loss_l = LossSpec.pairwise_align(key_r, f_r, source_style=key_l, alpha=cfg.alpha)
        f_l, _ = refine_nnf(guide_l, guide_i, loss_l, m, f_l, 1, first_iteration=2 * it,
                            observer=_tagged(observer, "l"))
        loss_r = LossSpec.pairwise_align(key_l, f_l, source_style=key_r, alpha=cfg.alpha)
        f_r, _ = refine_nnf(guide_r, guide_i, loss_r, m, f_r, 1, first_iteration=2 * it + 1,
                            observer=_tagged(observer, "r"))
    if stats is not None:
        stats["alignments"] = stats.get("alignments", 0) + 1
    return f_l, f_r


def _tagged(observer, side):
    if observer is None:
        return None

    def call(**kw):
        observer(side=side, **kw)
    return call


def _fields_from(guide, key_index, key_frame, targets, cfg, stats):
    """NNF(G_key, G_t) for each target index, in the given (outward) order."""
    if not targets:
        return {}
    if cfg.tracking:
        fs = tracked_nnf_sequence(guide[key_index], [guide[t] for t in targets], cfg, key_frame, stats)
        return dict(zip(targets, fs))
    out = {}
    loss = _loss(cfg, key_frame)
    for t in targets:
        if stats is not None:
            stats["nnf_count"] = stats.get("nnf_count", 0) + 1
        c = replace(cfg.match, rng_seed=job_seed(cfg.match.rng_seed, (_TAG_PLAIN, key_index, t)))
        out[t] = estimate_nnf(guide[key_index], guide[t], loss, c)[0]
    return out


def extend_single_keyframe(guide, key, cfg: InterpConfig = InterpConfig(), targets=None,
                           stats: Optional[dict] = None) -> Video:
    """Every frame is the keyframe remapped through NNF(G_key, G_i)."""
    frames = guide.frames if isinstance(guide, Video) else list(guide)
    k, styled = key
    styled = check_frame(styled)
    KeyframeSet([(k, styled)], len(frames), np.shape(frames[0])[:2])
    out = _extend(frames, k, styled, cfg, range(len(frames)) if targets is None else targets, stats)
    return Video([out[i] for i in sorted(out)])


def _extend(frames, k, styled, cfg, indices, stats):
    p = cfg.match.patch_radius
    indices = sorted(set(indices))
    right = [i for i in indices if i > k]
    left = sorted((i for i in indices if i < k), reverse=True)
    fields = _fields_from(frames, k, styled, right, cfg, stats)
    fields.update(_fields_from(frames, k, styled, left, cfg, stats))
    out = {i: remap(styled, fields[i], p) for i in fields}
    if k in indices:
        out[k] = styled.copy()
    return out


def interpolate(guide, keys, cfg: InterpConfig = InterpConfig(), stats: Optional[dict] = None) -> Video:
    frames = guide.frames if isinstance(guide, Video) else list(guide)
    n = len(frames)
    if not isinstance(keys, KeyframeSet):
        keys = KeyframeSet(keys, n, np.shape(frames[0])[:2])
    else:
        KeyframeSet(keys.entries, n, np.shape(frames[0])[:2])
    p = cfg.match.patch_radius
    entries = keys.entries
    out: dict = {i: f.copy() for i, f in entries}
    first, last = entries[0], entries[-1]
    out.update(_extend(frames, first[0], first[1], cfg, range(0, first[0]), stats))
    out.update(_extend(frames, last[0], last[1], cfg, range(last[0] + 1, n), stats))
    align = cfg.aligns(len(entries))
    for (l, s_l), (r, s_r) in zip(entries, entries[1:]):
        inner = list(range(l + 1, r))
        if not inner:
            continue
        from_l = _fields_from(frames, l, s_l, inner, cfg, stats)
        from_r = _fields_from(frames, r, s_r, inner[::-1], cfg, stats)
        for i in inner:
            f_l, f_r = from_l[i], from_r[i]
            if align:
                f_l, f_r = aligned_pair_nnfs(s_l, s_r, frames[l], frames[r], frames[i], cfg, f_l, f_r, stats=stats)
            w_l, w_r = mix_weights(i, l, r)
            out[i] = np.clip(w_l * remap(s_l, f_l, p) + w_r * remap(s_r, f_r, p), 0.0, 1.0)
    return Video([out[i] for i in range(n)])


__all__ = [
    "InterpConfig", "KeyframeSet", "aligned_pair_nnfs", "cross_energy", "extend_single_keyframe",
    "interpolate", "mix_weights", "tracked_nnf_sequence",
]
