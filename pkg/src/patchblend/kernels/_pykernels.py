"""Numpy fallback for the compiled kernels.

Vectorized over pixels, sequential over patch taps and channels, in the same
order as the compiled loops so both backends round identically.
"""
import numpy as np


def _tap_rows(n_tgt, n_src, f, d, axis):
    """Clamped target index and clamped source index along one axis for tap offset d."""
    base = np.arange(n_tgt)
    nb = np.clip(base + d, 0, n_tgt - 1)
    shift = nb - base
    if axis == 0:
        s = np.clip(f + shift[:, None], 0, n_src - 1)
        return nb[:, None], s
    s = np.clip(f + shift[None, :], 0, n_src - 1)
    return nb[None, :], s


def _taps(p):
    for dx in range(-p, p + 1):
        for dy in range(-p, p + 1):
            yield dx, dy


def patch_error(src, tgt, nnf, p, out, threads=1, bound=None, current=None):
    # bound/current are pruning hints; exact values always satisfy their contract
    ht, wt = tgt.shape[:2]
    hs, ws = src.shape[:2]
    fx = nnf[..., 0].astype(np.intp)
    fy = nnf[..., 1].astype(np.intp)
    acc = np.zeros((ht, wt))
    for dx, dy in _taps(p):
        nx, sx = _tap_rows(ht, hs, fx, dx, 0)
        ny, sy = _tap_rows(wt, ws, fy, dy, 1)
        s = src[sx, sy]
        t = tgt[nx, ny]
        for c in range(3):
            d = s[..., c] - t[..., c]
            acc += d * d
    out[...] = acc


def patch_error2(src, tgt, src_aux, tgt_aux, nnf, p, alpha, out, threads=1, bound=None, current=None):
    ht, wt = tgt.shape[:2]
    hs, ws = src.shape[:2]
    fx = nnf[..., 0].astype(np.intp)
    fy = nnf[..., 1].astype(np.intp)
    acc1 = np.zeros((ht, wt))
    acc2 = np.zeros((ht, wt))
    for dx, dy in _taps(p):
        nx, sx = _tap_rows(ht, hs, fx, dx, 0)
        ny, sy = _tap_rows(wt, ws, fy, dy, 1)
        s, t = src[sx, sy], tgt[nx, ny]
        sa, ta = src_aux[sx, sy], tgt_aux[nx, ny]
        for c in range(3):
            d = s[..., c] - t[..., c]
            acc1 += d * d
            d = sa[..., c] - ta[..., c]
            acc2 += d * d
    out[...] = alpha * acc1 + acc2


def pairwise_error(key_l, key_r, fid_l, fid_r, tgt, f_l, f_r, p, alpha, out_l, out_r, threads=1):
    ht, wt = tgt.shape[:2]
    hl, wl = key_l.shape[:2]
    hr, wr = key_r.shape[:2]
    flx, fly = f_l[..., 0].astype(np.intp), f_l[..., 1].astype(np.intp)
    frx, fry = f_r[..., 0].astype(np.intp), f_r[..., 1].astype(np.intp)
    accl = np.zeros((ht, wt))
    accr = np.zeros((ht, wt))
    cross = np.zeros((ht, wt))
    for dx, dy in _taps(p):
        nx, lx = _tap_rows(ht, hl, flx, dx, 0)
        ny, ly = _tap_rows(wt, wl, fly, dy, 1)
        _, rx = _tap_rows(ht, hr, frx, dx, 0)
        _, ry = _tap_rows(wt, wr, fry, dy, 1)
        t = tgt[nx, ny]
        gl, gr = fid_l[lx, ly], fid_r[rx, ry]
        kl, kr = key_l[lx, ly], key_r[rx, ry]
        for c in range(3):
            d = gl[..., c] - t[..., c]
            accl += d * d
            d = gr[..., c] - t[..., c]
            accr += d * d
            d = kl[..., c] - kr[..., c]
            cross += d * d
    out_l[...] = alpha * accl + cross
    out_r[...] = alpha * accr + cross


def remap(src, nnf, p, out, threads=1):
    ht, wt = nnf.shape[:2]
    hs, ws = src.shape[:2]
    xs = np.arange(ht)
    ys = np.arange(wt)
    center = src[nnf[..., 0], nnf[..., 1]]
    acc = np.zeros((ht, wt, 3))
    for dx, dy in _taps(p):
        nx = np.clip(xs + dx, 0, ht - 1)
        ny = np.clip(ys + dy, 0, wt - 1)
        nb = nnf[nx[:, None], ny[None, :]]
        sx = np.clip(nb[..., 0] - (nx - xs)[:, None], 0, hs - 1)
        sy = np.clip(nb[..., 1] - (ny - ys)[None, :], 0, ws - 1)
        acc += src[sx, sy] - center
    out[...] = center + acc / float((2 * p + 1) ** 2)
