# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-pixel kernels.

Every kernel is data-parallel over target rows: each output cell is written by
exactly one thread and reads only frozen inputs, so results do not depend on
the thread count. Per-pixel accumulation order is (dx, dy, channel), matching
the numpy fallback term for term.
"""
from cython.parallel import prange


cdef inline Py_ssize_t _clamp(Py_ssize_t v, Py_ssize_t hi) noexcept nogil:
    if v < 0:
        return 0
    if v > hi:
        return hi
    return v


def patch_error(
    const double[:, :, ::1] src,
    const double[:, :, ::1] tgt,
    const int[:, :, ::1] nnf,
    int p,
    double[:, ::1] out,
    int threads=1,
    const double[:, ::1] bound=None,
    const int[:, :, ::1] current=None,
):
    """||src[F] - tgt||^2 per target pixel.

    With ``bound``, a pixel whose sum exceeds it stops early and reports a
    value >= bound; a pixel whose candidate equals ``current`` reports bound.
    Exact values are only guaranteed below the bound.
    """
    cdef Py_ssize_t ht = tgt.shape[0], wt = tgt.shape[1]
    cdef Py_ssize_t hs = src.shape[0], ws = src.shape[1]
    cdef Py_ssize_t x, y, nx, ny, sx, sy, fx, fy
    cdef int dx, dy, c
    cdef bint pruned = bound is not None, skip_same = current is not None
    cdef double acc, d, lim
    for x in prange(ht, nogil=True, schedule="static", num_threads=threads):
        for y in range(wt):
            fx = nnf[x, y, 0]
            fy = nnf[x, y, 1]
            lim = 0.0
            if pruned:
                lim = bound[x, y]
                if skip_same and fx == current[x, y, 0] and fy == current[x, y, 1]:
                    out[x, y] = lim
                    continue
            acc = 0.0
            for dx in range(-p, p + 1):
                nx = _clamp(x + dx, ht - 1)
                sx = _clamp(fx + nx - x, hs - 1)
                for dy in range(-p, p + 1):
                    ny = _clamp(y + dy, wt - 1)
                    sy = _clamp(fy + ny - y, ws - 1)
                    for c in range(3):
                        d = src[sx, sy, c] - tgt[nx, ny, c]
                        acc = acc + d * d
                if pruned and acc >= lim:
                    break
            out[x, y] = acc


def patch_error2(
    const double[:, :, ::1] src,
    const double[:, :, ::1] tgt,
    const double[:, :, ::1] src_aux,
    const double[:, :, ::1] tgt_aux,
    const int[:, :, ::1] nnf,
    int p,
    double alpha,
    double[:, ::1] out,
    int threads=1,
    const double[:, ::1] bound=None,
    const int[:, :, ::1] current=None,
):
    """alpha * ||src[F] - tgt||^2 + ||src_aux[F] - tgt_aux||^2 per target pixel.

    ``bound`` and ``current`` prune as in :func:`patch_error`.
    """
    cdef Py_ssize_t ht = tgt.shape[0], wt = tgt.shape[1]
    cdef Py_ssize_t hs = src.shape[0], ws = src.shape[1]
    cdef Py_ssize_t x, y, nx, ny, sx, sy, fx, fy
    cdef int dx, dy, c
    cdef bint pruned = bound is not None, skip_same = current is not None
    cdef double acc1, acc2, d, lim
    for x in prange(ht, nogil=True, schedule="static", num_threads=threads):
        for y in range(wt):
            fx = nnf[x, y, 0]
            fy = nnf[x, y, 1]
            lim = 0.0
            if pruned:
                lim = bound[x, y]
                if skip_same and fx == current[x, y, 0] and fy == current[x, y, 1]:
                    out[x, y] = lim
                    continue
            acc1 = 0.0
            acc2 = 0.0
            for dx in range(-p, p + 1):
                nx = _clamp(x + dx, ht - 1)
                sx = _clamp(fx + nx - x, hs - 1)
                for dy in range(-p, p + 1):
                    ny = _clamp(y + dy, wt - 1)
                    sy = _clamp(fy + ny - y, ws - 1)
                    for c in range(3):
                        d = src[sx, sy, c] - tgt[nx, ny, c]
                        acc1 = acc1 + d * d
                        d = src_aux[sx, sy, c] - tgt_aux[nx, ny, c]
                        acc2 = acc2 + d * d
                if pruned and alpha * acc1 + acc2 >= lim:
                    break
            out[x, y] = alpha * acc1 + acc2


def pairwise_error(
    const double[:, :, ::1] key_l,
    const double[:, :, ::1] key_r,
    const double[:, :, ::1] fid_l,
    const double[:, :, ::1] fid_r,
    const double[:, :, ::1] tgt,
    const int[:, :, ::1] f_l,
    const int[:, :, ::1] f_r,
    int p,
    double alpha,
    double[:, ::1] out_l,
    double[:, ::1] out_r,
    int threads=1,
):
    """Both pairwise-alignment maps; fid_* are the frames compared against tgt."""
    cdef Py_ssize_t ht = tgt.shape[0], wt = tgt.shape[1]
    cdef Py_ssize_t hl = key_l.shape[0], wl = key_l.shape[1]
    cdef Py_ssize_t hr = key_r.shape[0], wr = key_r.shape[1]
    cdef Py_ssize_t x, y, nx, ny, lx, ly, rx, ry
    cdef Py_ssize_t flx, fly, frx, fry
    cdef int dx, dy, c
    cdef double accl, accr, cross, d, t
    for x in prange(ht, nogil=True, schedule="static", num_threads=threads):
        for y in range(wt):
            flx = f_l[x, y, 0]
            fly = f_l[x, y, 1]
            frx = f_r[x, y, 0]
            fry = f_r[x, y, 1]
            accl = 0.0
            accr = 0.0
            cross = 0.0
            for dx in range(-p, p + 1):
                nx = _clamp(x + dx, ht - 1)
                lx = _clamp(flx + nx - x, hl - 1)
                rx = _clamp(frx + nx - x, hr - 1)
                for dy in range(-p, p + 1):
                    ny = _clamp(y + dy, wt - 1)
                    ly = _clamp(fly + ny - y, wl - 1)
                    ry = _clamp(fry + ny - y, wr - 1)
                    for c in range(3):
                        t = tgt[nx, ny, c]
                        d = fid_l[lx, ly, c] - t
                        accl = accl + d * d
                        d = fid_r[rx, ry, c] - t
                        accr = accr + d * d
                        d = key_l[lx, ly, c] - key_r[rx, ry, c]
                        cross = cross + d * d
            out_l[x, y] = alpha * accl + cross
            out_r[x, y] = alpha * accr + cross


def remap(
    const double[:, :, ::1] src,
    const int[:, :, ::1] nnf,
    int p,
    double[:, :, ::1] out,
    int threads=1,
):
    """Average of the (2p+1)^2 source patches covering each target pixel.

    Taps are summed as offsets from the pixel's own match, so an identity
    field or a constant source comes back exactly.
    """
    cdef Py_ssize_t ht = nnf.shape[0], wt = nnf.shape[1]
    cdef Py_ssize_t hs = src.shape[0], ws = src.shape[1]
    cdef Py_ssize_t x, y, nx, ny, sx, sy, cx, cy
    cdef int dx, dy
    cdef double a0, a1, a2, c0, c1, c2
    cdef double norm = <double>((2 * p + 1) * (2 * p + 1))
    for x in prange(ht, nogil=True, schedule="static", num_threads=threads):
        for y in range(wt):
            cx = nnf[x, y, 0]
            cy = nnf[x, y, 1]
            c0 = src[cx, cy, 0]
            c1 = src[cx, cy, 1]
            c2 = src[cx, cy, 2]
            a0 = 0.0
            a1 = 0.0
            a2 = 0.0
            for dx in range(-p, p + 1):
                nx = _clamp(x + dx, ht - 1)
                for dy in range(-p, p + 1):
                    ny = _clamp(y + dy, wt - 1)
                    sx = _clamp(nnf[nx, ny, 0] - (nx - x), hs - 1)
                    sy = _clamp(nnf[nx, ny, 1] - (ny - y), ws - 1)
                    a0 = a0 + (src[sx, sy, 0] - c0)
                    a1 = a1 + (src[sx, sy, 1] - c1)
                    a2 = a2 + (src[sx, sy, 2] - c2)
            out[x, y, 0] = c0 + a0 / norm
            out[x, y, 1] = c1 + a1 / norm
            out[x, y, 2] = c2 + a2 / norm
