"""Built-in release checks: identity-stub oracles and NNF-count bookkeeping.

Every property runs on synthetic videos with the estimator replaced by the
identity field, so the whole suite needs no real matching and runs in seconds.
"""
from __future__ import annotations

import math
from typing import Callable, Iterable

import numpy as np

from .blend import (BlendConfig, blend_balanced, blend_fast, build_remapping_table, query_cells,
                    window_bounds)
from .schedule import NNFScheduler, identity_field
from .synthetic import flicker, static_video


def stub_scheduler(cache: bool = True) -> NNFScheduler:
    return NNFScheduler(identity_field, cache=cache)


def window_means(style, m: int) -> list[np.ndarray]:
    n = len(style)
    out = []
    for i in range(n):
        lo, hi = window_bounds(i, n, m)
        out.append(np.mean(np.stack(style[lo:hi + 1]), axis=0))
    return out


def stub_video(n: int, size: int = 64, seed: int = 0):
    guide = static_video(n, size, size, seed)
    return guide, flicker(guide, 0.2, seed + 1)


def _check_stub_mean(cells_for, n=16, size=64):
    guide, style = stub_video(n, size)
    worst = 0.0
    for m in (0, 1, 3, None):
        cfg = BlendConfig(window=m)
        got = blend_fast(guide, style, cfg, stub_scheduler(), cells_for=cells_for)
        want = window_means(style, cfg.radius(n))
        worst = max(worst, max(float(np.abs(a - b).max()) for a, b in zip(got, want)))
    return worst <= 1e-6, f"max deviation {worst:.2e}"


def _check_stub_balanced(cells_for, n=16, size=64):
    guide, style = stub_video(n, size)
    worst = 0.0
    for m in (0, 1, 3, None):
        fast = blend_fast(guide, style, BlendConfig(window=m), stub_scheduler(), cells_for=cells_for)
        bal = blend_balanced(guide, style, BlendConfig(mode="balanced", window=m), stub_scheduler(False))
        worst = max(worst, max(float(np.abs(a - b).max()) for a, b in zip(fast, bal)))
    return worst <= 1e-6, f"max deviation {worst:.2e}"


def _build_count(n):
    guide, style = stub_video(n, 8)
    sched = stub_scheduler()
    build_remapping_table(guide, style, BlendConfig(), sched)
    return sched.count


def _check_count_8(cells_for):
    c = _build_count(8)
    return c == 12, f"{c} build-phase NNFs at N=8"


def _check_count_2(cells_for):
    c = _build_count(2)
    return c == 1, f"{c} build-phase NNFs at N=2"


def _check_trace(cells_for):
    got = cells_for(0, 6)
    return got == [(6, 0), (5, 1), (3, 2)], f"query(0,6) -> {got}"


def _check_coverage(cells_for, n=33):
    for r in range(n):
        for l in range(r + 1):
            covered = []
            for i, level in cells_for(l, r):
                covered.extend(range(i - (1 << level) + 1, i + 1))
            if sorted(covered) != list(range(l, r + 1)):
                return False, f"query({l},{r}) covers {sorted(covered)}"
    return True, f"all intervals of {n} frames covered exactly once"


def _check_fast_bound(cells_for, n=64):
    guide, style = stub_video(n, 8)
    bound = 4 * n * math.log2(n)
    worst = 0
    for m in (1, 4, 15, None):
        sched = stub_scheduler()
        blend_fast(guide, style, BlendConfig(window=m), sched, cells_for=cells_for)
        worst = max(worst, sched.count)
    return worst <= bound, f"max fast-mode count {worst} <= {bound:.0f}"


PROPERTIES: list[tuple[str, Callable]] = [
    ("stub fast equals window mean", _check_stub_mean),
    ("stub fast equals stub balanced", _check_stub_balanced),
    ("remapping table count N=8", _check_count_8),
    ("remapping table count N=2", _check_count_2),
    ("query trace (0,6)", _check_trace),
    ("query coverage", _check_coverage),
    ("fast-mode count bound N=64", _check_fast_bound),
]


def run_properties(cells_for: Callable = query_cells, names: Iterable[str] | None = None,
                   echo: Callable[[str], None] = print) -> list[tuple[str, bool, str]]:
    wanted = None if names is None else set(names)
    results = []
    for name, check in PROPERTIES:
        if wanted is not None and name not in wanted:
            continue
        try:
            ok, detail = check(cells_for)
        except Exception as exc:  # a broken walk may index missing cells
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append((name, bool(ok), detail))
        echo(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return results


def corrupted_query_cells(l: int, r: int) -> list[tuple[int, int]]:
    """query_cells with the advance doubled; used as a negative control."""
    cells = []
    i = r
    while i >= l:
        level = 0
        while i & (1 << level) and i - (1 << (level + 1)) + 1 >= l:
            level += 1
        cells.append((i, level))
        i -= 1 << (level + 1)
    return cells
