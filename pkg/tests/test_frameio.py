import numpy as np
import pytest
from PIL import Image

from patchblend.frameio import (FrameCache, LazySequence, SequenceError, Video, decode_png, encode_frame,
                                list_sequence, load_sequence, save_sequence)


def write_png(path, h, w, value=128):
    Image.fromarray(np.full((h, w, 3), value, np.uint8), "RGB").save(path)


def test_load_contiguous(tmp_path):
    for i in (1, 2, 3):
        write_png(tmp_path / f"{i:04d}.png", 64, 64)
    v = load_sequence(tmp_path)
    assert len(v) == 3 and v.shape == (64, 64)


def test_gap_rejected(tmp_path):
    write_png(tmp_path / "0001.png", 8, 8)
    write_png(tmp_path / "0003.png", 8, 8)
    with pytest.raises(SequenceError, match="non-contiguous frame indices"):
        load_sequence(tmp_path)


def test_mixed_dimensions_rejected(tmp_path):
    write_png(tmp_path / "0001.png", 64, 64)
    write_png(tmp_path / "0002.png", 32, 32)
    with pytest.raises(SequenceError, match="mixed dimensions"):
        load_sequence(tmp_path)


def test_missing_and_empty_dirs(tmp_path):
    with pytest.raises(SequenceError):
        load_sequence(tmp_path / "nope")
    with pytest.raises(SequenceError):
        load_sequence(tmp_path)


def test_order_is_numeric(tmp_path):
    for i in range(1, 12):
        write_png(tmp_path / f"{i:04d}.png", 4, 4, value=i * 20)
    v = load_sequence(tmp_path)
    assert [round(f[0, 0, 0] * 255) for f in v] == [i * 20 for i in range(1, 12)]
    assert [p.name for p in list_sequence(tmp_path)][:2] == ["0001.png", "0002.png"]


def test_round_trip_within_quantization(tmp_path, rng):
    v = Video([rng.random((9, 7, 3)) for _ in range(2)])
    save_sequence(v, tmp_path)
    back = load_sequence(tmp_path)
    assert len(back) == 2 and back.shape == (9, 7)
    for a, b in zip(v, back):
        assert np.abs(a - b).max() <= 1 / 255


def test_save_names_files(tmp_path):
    save_sequence(Video([np.zeros((4, 4, 3))] * 5), tmp_path / "out")
    assert sorted(p.name for p in (tmp_path / "out").iterdir()) == [f"{i:04d}.png" for i in range(1, 6)]


def test_one_encodes_to_255():
    assert encode_frame(np.ones((2, 2, 3))).min() == 255
    assert encode_frame(np.zeros((2, 2, 3))).max() == 0


def test_decode_garbage(tmp_path):
    p = tmp_path / "0001.png"
    p.write_bytes(b"not a png")
    with pytest.raises(SequenceError):
        decode_png(p)


@pytest.mark.parametrize("bad", [np.zeros((4, 4)), np.full((4, 4, 3), 1.5), np.full((4, 4, 3), np.nan),
                                 np.zeros((0, 4, 3))])
def test_video_validates_frames(bad):
    with pytest.raises(SequenceError):
        Video([bad])


def test_video_rejects_empty_and_mixed():
    with pytest.raises(SequenceError):
        Video([])
    with pytest.raises(SequenceError, match="mixed dimensions"):
        Video([np.zeros((4, 4, 3)), np.zeros((4, 5, 3))])


def test_frame_cache_tracks_peak():
    loads = []
    cache = FrameCache(lambda k: loads.append(k) or k, capacity=3)
    for i in range(10):
        cache.retain(range(max(0, i - 1), min(9, i + 1) + 1))
        for j in range(max(0, i - 1), min(9, i + 1) + 1):
            assert cache.get(j) == j
    assert cache.peak == 3
    assert loads == list(range(10))


def test_frame_cache_overflow():
    cache = FrameCache(lambda k: k, capacity=2)
    cache.get(0)
    cache.get(1)
    with pytest.raises(MemoryError):
        cache.get(2)


def test_lazy_sequence(tmp_path):
    save_sequence(Video([np.full((5, 6, 3), 0.2)] * 3), tmp_path)
    lazy = LazySequence(tmp_path)
    assert len(lazy) == 3 and lazy.shape == (5, 6)
    assert np.allclose(lazy[2], 51 / 255)
