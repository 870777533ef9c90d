import tracemalloc

import numpy as np
import pytest
from hypothesis import given, strategies as st

from patchblend.nnf import identity_nnf, init_random
from patchblend.remap import BlendAccumulator, accumulate, remap, remap_accumulator

cases = st.tuples(st.integers(0, 2**31), st.integers(1, 10), st.integers(1, 10), st.integers(1, 10),
                  st.integers(1, 10), st.integers(1, 3))


def field_case(args):
    seed, hs, ws, ht, wt, p = args
    r = np.random.default_rng(seed)
    return r, r.random((hs, ws, 3)), init_random((ht, wt), (hs, ws), seed), p


@given(st.integers(1, 12), st.integers(1, 12), st.integers(1, 4), st.integers(0, 2**31))
def test_identity_reproduces_source(h, w, p, seed):
    src = np.random.default_rng(seed).random((h, w, 3))
    assert np.array_equal(remap(src, identity_nnf((h, w)), p), src)


@given(cases, st.floats(0, 1))
def test_constant_source(args, c):
    _, src, f, p = field_case(args)
    out = remap(np.full(src.shape, c), f, p)
    assert np.allclose(out, c, atol=1e-12, rtol=0)


@given(cases, st.floats(-2, 2), st.floats(-2, 2))
def test_linearity(args, a, b):
    r, s1, f, p = field_case(args)
    s2 = r.random(s1.shape)
    lhs = remap(a * s1 + b * s2, f, p)
    rhs = a * remap(s1, f, p) + b * remap(s2, f, p)
    assert np.abs(lhs - rhs).max() <= 1e-6


@given(cases)
def test_range(args):
    _, src, f, p = field_case(args)
    out = remap(src, f, p)
    assert out.min() >= src.min() - 1e-12 and out.max() <= src.max() + 1e-12


def test_shift_by_one_row_by_hand():
    src = np.arange(75, dtype=float).reshape(5, 5, 3) / 75
    f = identity_nnf((5, 5))
    f[..., 0] = np.minimum(f[..., 0] + 1, 4)
    out = remap(src, f, 1)
    assert np.allclose(out[2, 2], src[3, 2])
    # hand sum of the nine taps around (2, 2): each reads src[n + (1, 0)]
    taps = [src[2 + dx + 1, 2 + dy] for dx in (-1, 0, 1) for dy in (-1, 0, 1)]
    assert np.allclose(out[2, 2], np.mean(taps, axis=0))


def test_memory_stays_near_output_size():
    n = 2048
    src = np.random.default_rng(0).random((n, n, 3))
    f = identity_nnf((n, n))
    frame_bytes = src.nbytes
    tracemalloc.start()
    out = remap(src, f, 1)
    _, peak = tracemalloc.get_traced_memory()
    tracemalloc.stop()
    assert out.shape == src.shape
    assert peak <= 2 * 3 * frame_bytes


def test_accumulate_identity_and_counts(rng):
    a = BlendAccumulator(rng.random((3, 3, 3)), 3)
    b = BlendAccumulator(rng.random((3, 3, 3)), 5)
    z = BlendAccumulator.zero((3, 3))
    assert accumulate(a, z) is a and accumulate(z, a) is a
    assert (a + b).count == 8
    assert np.array_equal((a + b).sum, (b + a).sum)
    with pytest.raises(ValueError):
        accumulate(a, BlendAccumulator.zero((2, 3)))
    with pytest.raises(ValueError):
        z.mean


def test_remap_accumulator(rng):
    src, tgt_dims = rng.random((6, 7, 3)), (5, 4)
    f = init_random(tgt_dims, (6, 7), 2)
    one = remap_accumulator(BlendAccumulator.of(src), f, 2)
    assert one.count == 1 and np.array_equal(one.sum, remap(src, f, 2))
    acc = BlendAccumulator(rng.random((6, 6, 3)) * 4, 4)
    same = remap_accumulator(acc, identity_nnf((6, 6)), 2)
    assert same.count == 4 and np.allclose(same.sum, acc.sum, atol=1e-12)
    c = BlendAccumulator.of(np.full((6, 7, 3), 0.2)) + BlendAccumulator.of(np.full((6, 7, 3), 0.6))
    assert np.allclose(remap_accumulator(c, f, 1).mean, 0.4)
