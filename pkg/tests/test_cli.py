import json
import subprocess
import sys

import numpy as np
import pytest
from PIL import Image

from patchblend.cli import main
from patchblend.frameio import Video, save_sequence
from patchblend.synthetic import flicker, static_video, texture


@pytest.fixture
def pair(tmp_path):
    guide = static_video(16, 32, 32)
    save_sequence(Video(guide), tmp_path / "g")
    save_sequence(Video(flicker(guide, 0.1)), tmp_path / "s")
    return tmp_path


def pngs(d):
    return sorted(p.name for p in d.glob("*.png"))


def read(p):
    return np.asarray(Image.open(p))


def same_bytes(a, b):
    return all((a / n).read_bytes() == (b / n).read_bytes() for n in pngs(a))


def run(*args):
    return main([str(a) for a in args])


def test_blend_fast_with_stats(pair):
    out = pair / "o"
    assert run("blend", "--guide", pair / "g", "--style", pair / "s", "--out", out, "--mode", "fast",
               "--window", 15, "--iterations", 2, "--emit-stats", "-q") == 0
    assert len(pngs(out)) == 16
    stats = json.loads((out / "stats.json").read_text())
    assert stats["schema"] == 1
    assert set(stats) >= {"nnf_count", "phase_times_ms", "peak_frames_resident", "effective_config"}
    assert stats["nnf_count"] > 0 and stats["effective_config"]["window"] == 15


def test_zero_window_round_trips(pair):
    out = pair / "o"
    assert run("blend", "--guide", pair / "g", "--style", pair / "s", "--out", out, "--window", 0, "-q") == 0
    for name in pngs(pair / "s"):
        assert np.array_equal(read(out / name), read(pair / "s" / name))


def test_same_seed_same_bytes(pair):
    args = ["blend", "--guide", pair / "g", "--style", pair / "s", "--window", 2, "--iterations", 2,
            "--seed", 42, "--workers", 4, "--mode", "balanced", "-q", "--emit-stats"]
    assert run(*args, "--out", pair / "a") == 0
    assert run(*args, "--out", pair / "b") == 0
    assert same_bytes(pair / "a", pair / "b")
    sa = json.loads((pair / "a" / "stats.json").read_text())
    sb = json.loads((pair / "b" / "stats.json").read_text())
    assert sa["nnf_count"] == sb["nnf_count"]


def test_accurate_streams(pair):
    out = pair / "o"
    assert run("blend", "--guide", pair / "g", "--style", pair / "s", "--out", out, "--mode", "accurate",
               "--window", 1, "--iterations", 1, "--emit-stats", "-q") == 0
    stats = json.loads((out / "stats.json").read_text())
    assert len(pngs(out)) == 16 and stats["peak_frames_resident"] <= 3


def test_interpolate_single_key(pair):
    out = pair / "o"
    assert run("interpolate", "--guide", pair / "g", "--out", out, "--iterations", 1,
               "--keyframe", f"0:{pair / 's' / '0001.png'}", "-q") == 0
    assert len(pngs(out)) == 16


def test_interpolate_keeps_keyframes(tmp_path):
    guide = static_video(10, 32, 32)
    save_sequence(Video(guide), tmp_path / "g")
    save_sequence(Video([texture(32, 32, 1), texture(32, 32, 2)]), tmp_path / "k")
    out = tmp_path / "o"
    assert run("interpolate", "--guide", tmp_path / "g", "--out", out, "--iterations", 1, "-q",
               "--keyframe", f"0:{tmp_path / 'k' / '0001.png'}",
               "--keyframe", f"9:{tmp_path / 'k' / '0002.png'}") == 0
    assert len(pngs(out)) == 10
    assert np.array_equal(read(out / "0001.png"), read(tmp_path / "k" / "0001.png"))
    assert np.array_equal(read(out / "0010.png"), read(tmp_path / "k" / "0002.png"))


def test_keyframe_out_of_range(pair, capsys):
    out = pair / "o"
    assert run("interpolate", "--guide", pair / "g", "--out", out,
               "--keyframe", f"16:{pair / 's' / '0001.png'}") != 0
    assert "keyframe index out of range" in capsys.readouterr().err
    assert not out.exists()


def test_config_file_and_override(pair, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"guide": str(pair / "g"), "style": str(pair / "s"), "window": 0, "alpha": 3.0,
                               "iterations": 1}))
    out = pair / "o"
    assert run("blend", "--config", cfg, "--out", out, "--alpha", 1.5, "--emit-stats", "-q") == 0
    eff = json.loads((out / "stats.json").read_text())["effective_config"]
    assert eff["alpha"] == 1.5 and eff["window"] == 0 and eff["iterations"] == 1


def test_unknown_config_key(pair, tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"windw": 3}))
    assert run("blend", "--config", cfg, "--guide", pair / "g", "--style", pair / "s", "--out", pair / "o") != 0
    assert "unknown config keys" in capsys.readouterr().err


@pytest.mark.parametrize("extra", [["--window", "wide"], ["--window", "-2"], ["--patch-radius", "0"],
                                   ["--seed", "-1"]])
def test_bad_values(pair, extra):
    assert run("blend", "--guide", pair / "g", "--style", pair / "s", "--out", pair / "o", *extra) != 0
    assert not (pair / "o").exists()


def test_failure_removes_partial_output(pair):
    # style shorter than guide: fails after validation of inputs, nothing is left behind
    (pair / "s" / "0016.png").unlink()
    assert run("blend", "--guide", pair / "g", "--style", pair / "s", "--out", pair / "o", "-q") != 0
    assert not (pair / "o").exists()


def test_failure_mid_write_rolls_back(pair, monkeypatch):
    import patchblend.cli as cli
    calls = []

    def flaky(frame, path):
        calls.append(path)
        if len(calls) == 5:
            raise OSError("disk full")
        Image.fromarray(np.zeros((32, 32, 3), np.uint8)).save(path)

    monkeypatch.setattr(cli, "save_frame", flaky)
    (pair / "o").mkdir()
    (pair / "o" / "keep.txt").write_text("x")
    assert run("blend", "--guide", pair / "g", "--style", pair / "s", "--out", pair / "o", "--window", 0, "-q") != 0
    assert [p.name for p in (pair / "o").iterdir()] == ["keep.txt"]


def test_missing_inputs(tmp_path):
    assert run("blend", "--guide", tmp_path / "none", "--style", tmp_path / "none", "--out", tmp_path / "o") != 0
    with pytest.raises(SystemExit):
        run("blend", "--tracking", "maybe")


def test_module_entry_point_selftest():
    res = subprocess.run([sys.executable, "-m", "patchblend", "selftest"], capture_output=True, text=True)
    assert res.returncode == 0, res.stdout + res.stderr
    assert "FAIL" not in res.stdout and res.stdout.count("PASS") >= 7


def test_selftest_negative_control(capsys):
    assert run("selftest", "--corrupt-query") != 0
    assert "FAIL  query coverage" in capsys.readouterr().out
