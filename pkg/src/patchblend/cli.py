"""Command line: ``patchblend blend|interpolate|selftest``."""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

from . import kernels
from .blend import MODES, BlendConfig, blend
from .frameio import (DEFAULT_PATTERN, LazySequence, SequenceError, decode_png, list_sequence, load_sequence,
                      save_frame)
from .interp import InterpConfig, KeyframeSet, interpolate
from .nnf import MatchConfig
from .schedule import NNFScheduler

STATS_SCHEMA = 1
STATS_NAME = "stats.json"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    subcommand: str = "blend"
    guide: Optional[str] = None
    style: Optional[str] = None
    keyframes: list = field(default_factory=list)  # ["index:path", ...]
    out: Optional[str] = None
    pattern: str = DEFAULT_PATTERN
    mode: str = "fast"
    window: object = 15  # int or "full"
    alpha: float = 2.0
    patch_radius: int = 3
    iterations: int = MatchConfig.iterations
    seed: int = 0
    workers: int = 0  # 0: all available cores
    tracking: Optional[bool] = None  # None: the subcommand's default
    alignment: Optional[bool] = None
    emit_stats: bool = False
    stats_file: Optional[str] = None

    def resolved_workers(self) -> int:
        return self.workers if self.workers > 0 else (os.cpu_count() or 1)

    def match(self) -> MatchConfig:
        return MatchConfig(patch_radius=self.patch_radius, iterations=self.iterations,
                           rng_seed=self.seed)

    def blend_config(self) -> BlendConfig:
        return BlendConfig(mode=self.mode, window=None if self.window == "full" else self.window,
                           alpha=self.alpha, match=self.match(), tracking=bool(self.tracking))

    def interp_config(self) -> InterpConfig:
        return InterpConfig(tracking=True if self.tracking is None else self.tracking,
                            alignment=self.alignment, alpha=self.alpha, match=self.match())

    def validate(self) -> "RunConfig":
        if self.subcommand not in ("blend", "interpolate"):
            raise ConfigError(f"unknown subcommand {self.subcommand!r}")
        self.window = parse_window(self.window)
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.workers < 0:
            raise ConfigError("workers must be >= 0")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {', '.join(MODES)}")
        if not self.guide or not self.out:
            raise ConfigError("--guide and --out are required")
        if self.subcommand == "blend" and not self.style:
            raise ConfigError("--style is required for blend")
        if self.subcommand == "interpolate" and not self.keyframes:
            raise ConfigError("at least one --keyframe INDEX:PATH is required")
        try:
            self.blend_config() if self.subcommand == "blend" else self.interp_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return self

    def effective(self) -> dict:
        d = asdict(self)
        d["workers"] = self.resolved_workers()
        return d


_KEYS = {f.name for f in fields(RunConfig)} - {"subcommand"}


def parse_window(v):
    if v == "full" or v is None:
        return "full"
    try:
        m = int(v)
    except (TypeError, ValueError):
        raise ConfigError(f"window must be an integer or 'full', got {v!r}") from None
    if m < 0:
        raise ConfigError("window must be >= 0")
    return m


def _on_off(v: str) -> bool:
    if v not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected on or off")
    return v == "on"


def load_config_file(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    unknown = sorted(set(data) - _KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return data


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the config file, then explicit flags."""
    values: dict = {}
    if getattr(args, "config", None):
        values.update(load_config_file(args.config))
    for k in _KEYS:
        v = getattr(args, k, None)
        if v is not None and v != []:
            values[k] = v
    try:
        cfg = RunConfig(subcommand=args.command, **values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.validate()


def parse_keyframes(specs) -> list[tuple[int, str]]:
    out = []
    for s in specs:
        idx, sep, path = str(s).partition(":")
        if not sep or not path:
            raise ConfigError(f"keyframe must be INDEX:PATH, got {s!r}")
        try:
            out.append((int(idx), path))
        except ValueError:
            raise ConfigError(f"bad keyframe index in {s!r}") from None
    return sorted(out)


class Outputs:
    """Writes numbered frames and remembers them so a failed run can be undone."""

    def __init__(self, directory, pattern: str):
        self.dir = Path(directory)
        self.pattern = pattern
        self.created_dir = not self.dir.exists()
        self.written: list[Path] = []

    def open(self):
        try:
            self.dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise SequenceError(f"cannot create {self.dir}: {exc}") from exc

    def write(self, i: int, frame) -> None:
        path = self.dir / (self.pattern % (i + 1))
        self.written.append(path)
        try:
            save_frame(frame, path)
        except OSError as exc:
            raise SequenceError(f"cannot write {path}: {exc}") from exc

    def write_json(self, path: Path, data: dict) -> None:
        self.written.append(path)
        path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")

    def verify(self, n: int) -> None:
        for k in range(n):
            decode_png(self.dir / (self.pattern % (k + 1)))

    def rollback(self) -> None:
        for p in self.written:
            try:
                p.unlink()
            except OSError:
                pass
        if self.created_dir:
            try:
                self.dir.rmdir()
            except OSError:
                pass


class Phases:
    def __init__(self):
        self.ms: dict[str, float] = {}

    @contextmanager
    def __call__(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.ms[name] = self.ms.get(name, 0.0) + 1000.0 * (time.perf_counter() - t0)


def _stats(cfg: RunConfig, nnf_count: int, phases: Phases, peak: int) -> dict:
    return {"schema": STATS_SCHEMA, "nnf_count": int(nnf_count), "phase_times_ms": phases.ms,
            "peak_frames_resident": int(peak), "effective_config": cfg.effective()}


def _progress(msg: str, quiet: bool) -> None:
    if not quiet:
        print(msg, file=sys.stderr, flush=True)


def _finish(cfg: RunConfig, out: Outputs, n: int, stats: dict) -> None:
    out.verify(n)
    if cfg.emit_stats:
        path = Path(cfg.stats_file) if cfg.stats_file else out.dir / STATS_NAME
        out.write_json(path, stats)


def run_blend(cfg: RunConfig, quiet: bool = False) -> int:
    bc = cfg.blend_config()
    workers = cfg.resolved_workers()
    phases = Phases()
    out = Outputs(cfg.out, cfg.pattern)
    scheduler = NNFScheduler(workers=workers, cache=bc.mode == "fast")
    try:
        with phases("load"):
            if bc.mode == "accurate":
                guide = LazySequence(cfg.guide, cfg.pattern, "guide")
                style = LazySequence(cfg.style, cfg.pattern, "style")
                if guide.shape != style.shape:
                    raise SequenceError(f"guide is {guide.shape}, style is {style.shape}")
            else:
                guide = load_sequence(cfg.guide, cfg.pattern, "guide", workers)
                style = load_sequence(cfg.style, cfg.pattern, "style", workers)
            n = len(style)
            if len(guide) != n:
                raise SequenceError(f"guide has {len(guide)} frames, style has {n}")
        _progress(f"blend: {n} frames, mode {bc.mode}, window {cfg.window}", quiet)
        out.open()
        if bc.mode == "accurate":
            run_stats: dict = {}
            with phases("blend"):
                blend(guide, style, bc, scheduler, sink=out.write, stats=run_stats)
            peak = run_stats.get("peak_frames_resident", 0)
        else:
            with phases("blend"):
                result = blend(guide, style, bc, scheduler)
            with phases("write"):
                for i, f in enumerate(result):
                    out.write(i, f)
            peak = 2 * n
        _finish(cfg, out, n, _stats(cfg, scheduler.count, phases, peak))
    except BaseException:
        out.rollback()
        raise
    _progress(f"blend: wrote {n} frames to {out.dir} ({scheduler.count} NNF estimations)", quiet)
    return 0


def run_interpolate(cfg: RunConfig, quiet: bool = False) -> int:
    ic = cfg.interp_config()
    workers = cfg.resolved_workers()
    phases = Phases()
    out = Outputs(cfg.out, cfg.pattern)
    specs = parse_keyframes(cfg.keyframes)
    try:
        with phases("load"):
            n = len(list_sequence(cfg.guide, cfg.pattern))
            for k, _ in specs:  # before decoding anything
                if not 0 <= k < n:
                    raise ConfigError(f"keyframe index out of range: {k} (guide has {n} frames)")
            guide = load_sequence(cfg.guide, cfg.pattern, "guide", workers)
            keys = KeyframeSet([(k, decode_png(p)) for k, p in specs], n, guide.shape)
        _progress(f"interpolate: {n} frames from keyframes {keys.indices}", quiet)
        out.open()
        run_stats: dict = {}
        with phases("interpolate"):
            kernels.set_threads(workers)  # estimations run one after another here
            try:
                result = interpolate(guide, keys, ic, run_stats)
            finally:
                kernels.set_threads(1)
        with phases("write"):
            for i, f in enumerate(result):
                out.write(i, f)
        _finish(cfg, out, n, _stats(cfg, run_stats.get("nnf_count", 0), phases, n + len(keys)))
    except BaseException:
        out.rollback()
        raise
    _progress(f"interpolate: wrote {n} frames to {out.dir}", quiet)
    return 0


def run_selftest(args) -> int:
    from .selftest import corrupted_query_cells, run_properties
    from .blend import query_cells

    walk = corrupted_query_cells if getattr(args, "corrupt_query", False) else query_cells
    results = run_properties(walk)
    failed = [r for r in results if not r[1]]
    print(f"{len(results) - len(failed)}/{len(results)} properties passed "
          f"(kernel backend: {kernels.backend()})")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="patchblend", description="Patch-based video deflickering and keyframe propagation.")
    sub = ap.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--guide", metavar="DIR")
    common.add_argument("--out", metavar="DIR")
    common.add_argument("--pattern", help=f"frame filename pattern (default {DEFAULT_PATTERN})")
    common.add_argument("--alpha", type=float)
    common.add_argument("--patch-radius", dest="patch_radius", type=int)
    common.add_argument("--iterations", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int, help="worker threads (default: all cores)")
    common.add_argument("--tracking", type=_on_off, metavar="on|off")
    common.add_argument("--config", metavar="FILE", help="JSON config; flags override it")
    common.add_argument("--emit-stats", dest="emit_stats", action="store_const", const=True)
    common.add_argument("--stats-file", dest="stats_file", metavar="FILE",
                        help=f"where to write stats (default OUT/{STATS_NAME})")
    common.add_argument("-q", "--quiet", action="store_true")

    b = sub.add_parser("blend", parents=[common], help="deflicker a style video against its guide")
    b.add_argument("--style", metavar="DIR")
    b.add_argument("--mode", choices=MODES)
    b.add_argument("--window", metavar="INT|full")

    it = sub.add_parser("interpolate", parents=[common], help="propagate styled keyframes over a guide video")
    it.add_argument("--keyframe", dest="keyframes", action="append", default=[], metavar="INDEX:PATH",
                    help="0-based guide index and styled frame; repeatable")
    it.add_argument("--alignment", type=_on_off, metavar="on|off")

    st = sub.add_parser("selftest", help="run the built-in oracle suite")
    st.add_argument("--corrupt-query", action="store_true", help=argparse.SUPPRESS)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "selftest":
        return run_selftest(args)
    try:
        cfg = resolve_config(args)
        if cfg.subcommand == "blend":
            return run_blend(cfg, args.quiet)
        return run_interpolate(cfg, args.quiet)
    except (ConfigError, SequenceError, ValueError, OSError, MemoryError) as exc:
        print(f"patchblend: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
