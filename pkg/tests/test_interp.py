import numpy as np
import pytest
from hypothesis import given, strategies as st

from patchblend.interp import (InterpConfig, KeyframeSet, aligned_pair_nnfs, extend_single_keyframe, interpolate,
                               mix_weights, tracked_nnf_sequence)
from patchblend.nnf import LossSpec, MatchConfig, cross_energy, estimate_nnf
from patchblend.remap import remap
from patchblend.synthetic import ghost_pair, moving_square, recolor, static_video, texture

QUICK = MatchConfig(iterations=3)


@given(st.integers(0, 50), st.integers(1, 50), st.data())
def test_weights_convex(l, span, data):
    r = l + span
    i = data.draw(st.integers(l, r))
    a, b = mix_weights(i, l, r)
    assert 0 <= a <= 1 and 0 <= b <= 1 and a + b == pytest.approx(1)
    assert mix_weights(l, l, r) == (1.0, 0.0)


def test_keyframe_set_validation():
    f = np.zeros((8, 8, 3))
    with pytest.raises(ValueError, match="keyframe index out of range"):
        KeyframeSet([(5, f)], n_frames=5)
    with pytest.raises(ValueError):
        KeyframeSet([(2, f), (2, f)])
    with pytest.raises(ValueError):
        KeyframeSet([])
    with pytest.raises(ValueError):
        KeyframeSet([(0, f)], 3, shape=(9, 8))


def test_every_frame_keyed_is_verbatim():
    guide = static_video(4, 16, 16)
    keys = [(i, texture(16, 16, 10 + i)) for i in range(4)]
    out = interpolate(guide, keys, InterpConfig(match=QUICK))
    assert all(np.array_equal(o, k) for o, (_, k) in zip(out, keys))


def test_static_scene_two_keys():
    guide = static_video(5, 64, 64)
    key = texture(64, 64, 9, 0.2, 0.8)
    stats = {}
    out = interpolate(guide, [(0, key), (4, key)], InterpConfig(), stats)
    assert np.array_equal(out[0], key) and np.array_equal(out[4], key)
    for f in out:
        assert np.abs(f - key).max() <= 1e-3
    assert stats["nnf_count"] > 0 and stats["alignments"] == 3


def test_static_scene_single_key():
    guide = static_video(4, 64, 64)
    key = texture(64, 64, 4)
    out = extend_single_keyframe(guide, (2, key), InterpConfig(tracking=False))
    assert np.array_equal(out[2], key)
    for f in out:
        assert np.abs(f - key).max() <= 1e-3


def test_extension_outside_key_span():
    guide = static_video(6, 64, 64)
    k1, k2 = texture(64, 64, 1), texture(64, 64, 2)
    out = interpolate(guide, [(2, k1), (3, k2)], InterpConfig())
    assert np.abs(out[0] - k1).max() <= 1e-3 and np.abs(out[5] - k2).max() <= 1e-3


def test_moving_square_follows_recolor():
    frames, corners = moving_square(21)
    color = np.array([1.0, 0.0, 0.0])
    key = recolor(frames[0], corners[0], 16, color)
    out = extend_single_keyframe(frames, (0, key), InterpConfig(tracking=True))
    for t in range(1, 21):
        x, y = corners[t]
        inner = out[t][x + 2:x + 14, y + 2:y + 14]
        assert np.abs(inner.mean(axis=(0, 1)) - color).max() <= 0.05


def test_single_target_is_plain_estimate():
    a, b, s = texture(36, 36, 0), texture(36, 36, 1), texture(36, 36, 2)
    cfg = InterpConfig(match=QUICK)
    (f,) = tracked_nnf_sequence(a, [b], cfg, source_style=s)
    g, _ = estimate_nnf(a, b, LossSpec.guide_style(s, alpha=cfg.alpha), QUICK)
    assert np.array_equal(f, g)


def test_identical_targets_give_identical_fields():
    img = texture(36, 36, 0)
    fields = tracked_nnf_sequence(img, [img] * 4, InterpConfig())
    assert all(np.array_equal(fields[0], f) for f in fields[1:])


def test_tracking_stabilises_fields():
    frames, _ = moving_square(8, size=48, step=(1, 0))
    src, targets = frames[0], frames[1:]

    def churn(tracking):
        cfg = InterpConfig(tracking=tracking, match=QUICK)
        if tracking:
            fs = tracked_nnf_sequence(src, targets, cfg)
        else:
            fs = [estimate_nnf(src, t, LossSpec(), MatchConfig(iterations=3, rng_seed=k))[0]
                  for k, t in enumerate(targets)]
        return np.mean([np.abs(a.astype(int) - b).mean() for a, b in zip(fs, fs[1:])])

    assert churn(True) <= churn(False)


def test_tracking_deterministic():
    frames, _ = moving_square(4, size=40)
    a = tracked_nnf_sequence(frames[0], frames[1:], InterpConfig(match=QUICK))
    b = tracked_nnf_sequence(frames[0], frames[1:], InterpConfig(match=QUICK))
    assert all(np.array_equal(x, y) for x, y in zip(a, b))


def test_alignment_cuts_cross_energy():
    g, key_l, key_r, _ = ghost_pair(48)
    base = MatchConfig()
    f0, _ = estimate_nnf(g, g, LossSpec(), base)
    before = cross_energy(key_l, key_r, f0, f0)
    f_l, f_r = aligned_pair_nnfs(key_l, key_r, g, g, g, InterpConfig())
    assert cross_energy(key_l, key_r, f_l, f_r) <= 0.5 * before


def test_alignment_with_identical_keys():
    g = texture(64, 64, 0)
    key = texture(64, 64, 1)
    f_l, f_r = aligned_pair_nnfs(key, key, g, g, g, InterpConfig())
    assert np.abs(remap(key, f_l, 3) - remap(key, f_r, 3)).max() <= 1e-6


def test_alignment_large_alpha_keeps_fidelity():
    g, key_l, key_r, _ = ghost_pair(40)
    g2 = texture(40, 40, 11)
    cfg = InterpConfig(alpha=1e6, match=QUICK)
    init_l, _ = estimate_nnf(g, g2, LossSpec(), QUICK)
    init_r, _ = estimate_nnf(g, g2, LossSpec(), QUICK)
    f_l, f_r = aligned_pair_nnfs(key_l, key_r, g, g, g2, cfg, init_l, init_r)
    from patchblend.nnf import patch_error
    assert patch_error(g, g2, f_l).sum() <= patch_error(g, g2, init_l).sum() * (1 + 1e-9)


def test_alignment_steps_monotone():
    g, key_l, key_r, _ = ghost_pair(40)

    def watch(side, level, iteration, step, before, after, **_):
        assert (after <= before).all()
        assert after.sum() <= before.sum()

    aligned_pair_nnfs(key_l, key_r, g, g, g, InterpConfig(match=QUICK), observer=watch)


def test_alignment_switch():
    assert InterpConfig().aligns(2) and not InterpConfig().aligns(1)
    assert not InterpConfig(alignment=False).aligns(3)
