"""Time the per-pixel kernels and one full NNF estimation on each backend.

    python benchmarks/bench_kernels.py --size 96 --radius 3 --repeat 5
"""
from __future__ import annotations

import argparse
import json
import time

import numpy as np

from patchblend import kernels
from patchblend.nnf import LossSpec, MatchConfig, estimate_nnf, init_random
from patchblend.synthetic import texture


def best_of(fn, repeat: int) -> tuple[float, object]:
    times, out = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(size: int, p: int, iterations: int):
    a, b, sa, sb = (texture(size, size, k) for k in range(4))
    f = init_random((size, size), (size, size), 1)
    g = init_random((size, size), (size, size), 2)
    e = kernels.patch_error(a, b, g, p)
    return {
        "patch_error": lambda: kernels.patch_error(a, b, f, p),
        "patch_error (guide+style)": lambda: kernels.patch_error(a, b, f, p, alpha=2.0, src_aux=sa, tgt_aux=sb),
        "patch_error (pruned)": lambda: kernels.patch_error(a, b, f, p, bound=e, current=g),
        "pairwise_error": lambda: kernels.pairwise_error(sa, sb, b, f, g, p, 2.0, fid_l=a, fid_r=a),
        "remap": lambda: kernels.remap(sa, f, p),
        "estimate_nnf (guide-style)": lambda: estimate_nnf(
            a, b, LossSpec.guide_style(sa), MatchConfig(patch_radius=p, iterations=iterations)),
    }


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=96)
    ap.add_argument("--radius", type=int, default=3)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--iterations", type=int, default=4, help="PatchMatch iterations for the full estimation")
    ap.add_argument("--json", action="store_true", help="print results as JSON")
    args = ap.parse_args(argv)

    backends = kernels.available_backends()
    results: dict = {}
    outputs: dict = {}
    prev = kernels.backend()
    try:
        for b in backends:
            kernels.set_backend(b)
            for name, fn in cases(args.size, args.radius, args.iterations).items():
                t, out = best_of(fn, args.repeat)
                results.setdefault(name, {})[b] = t
                outputs.setdefault(name, {})[b] = out
    finally:
        kernels.set_backend(prev)

    def same(xs):
        flat = [np.concatenate([np.ravel(a) for a in (x if isinstance(x, tuple) else (x,))]) for x in xs]
        return all(np.array_equal(flat[0], y) for y in flat[1:])

    # pruned values above the bound are backend-specific by contract
    identical = {n: same(o.values()) for n, o in outputs.items() if n != "patch_error (pruned)"}
    if args.json:
        print(json.dumps({"size": args.size, "radius": args.radius, "seconds": results, "identical": identical},
                         indent=2))
        return 0
    print(f"{args.size}x{args.size}, p={args.radius}, best of {args.repeat}")
    print(f"{'kernel':30s}" + "".join(f"{b:>12s}" for b in backends) + ("     speedup  same" if len(backends) > 1 else ""))
    for name, t in results.items():
        row = f"{name:30s}" + "".join(f"{1000 * t[b]:10.1f}ms" for b in backends)
        if len(backends) > 1:
            row += f"{t['python'] / t['compiled']:11.1f}x  {identical.get(name, '-')}"
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
