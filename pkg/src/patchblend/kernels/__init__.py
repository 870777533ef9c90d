"""Data-parallel image kernels: remap, patch error and pairwise patch error.

The compiled extension is used when it imports; otherwise the numpy fallback.
Set ``PATCHBLEND_BACKEND=python`` to force the fallback.
"""
from __future__ import annotations

import os

import numpy as np

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # pragma: no cover - depends on the build
    _ckernels = None

_BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["compiled"] = _ckernels


def _default_backend() -> str:
    forced = os.environ.get("PATCHBLEND_BACKEND", "").strip().lower()
    if forced:
        if forced not in ("python", "compiled"):
            raise ValueError(f"unknown PATCHBLEND_BACKEND {forced!r}")
        if forced not in _BACKENDS:
            raise ImportError("compiled kernels requested but the extension is not built")
        return forced
    return "compiled" if "compiled" in _BACKENDS else "python"


_active = _default_backend()
_threads = 1


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def backend() -> str:
    return _active


def set_backend(name: str) -> None:
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"backend {name!r} unavailable; have {available_backends()}")
    _active = name


def set_threads(n: int) -> None:
    """Threads used inside one kernel call (compiled backend only)."""
    global _threads
    _threads = max(1, int(n))


def _impl(name):
    if name is None:
        return _BACKENDS[_active]
    return _BACKENDS[name]


def as_frame(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float64)


def as_field(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.int32)


def _check_field(nnf, tgt_shape):
    if nnf.shape != (tgt_shape[0], tgt_shape[1], 2):
        raise ValueError(f"NNF shape {nnf.shape} does not match target {tgt_shape[:2]}")


def patch_error(src, tgt, nnf, p, *, alpha=None, src_aux=None, tgt_aux=None, bound=None, current=None,
                backend=None):
    """Per-pixel squared patch distance between tgt and the patches of src chosen by nnf.

    With auxiliary frames the result is ``alpha * d(src, tgt) + d(src_aux, tgt_aux)``.

    ``bound`` (with optional ``current``, the field the bound belongs to)
    allows the compiled kernel to stop early: values below the bound are
    exact, anything else only guaranteed to be >= bound. Comparisons
    ``out < bound`` therefore come out the same on every backend.
    """
    src, tgt, nnf = as_frame(src), as_frame(tgt), as_field(nnf)
    _check_field(nnf, tgt.shape)
    out = np.empty(tgt.shape[:2])
    impl = _impl(backend)
    if bound is not None:
        bound = as_frame(bound)
        if bound.shape != tgt.shape[:2]:
            raise ValueError("bound must match the target dimensions")
        if current is not None:
            current = as_field(current)
            _check_field(current, tgt.shape)
    else:
        current = None
    if src_aux is None:
        if alpha is not None:
            impl.patch_error(src, tgt, nnf, int(p), out, _threads)
            out *= alpha
        else:
            impl.patch_error(src, tgt, nnf, int(p), out, _threads, bound, current)
        return out
    src_aux, tgt_aux = as_frame(src_aux), as_frame(tgt_aux)
    if src_aux.shape != src.shape or tgt_aux.shape != tgt.shape:
        raise ValueError("auxiliary frames must match the source and target shapes")
    impl.patch_error2(src, tgt, src_aux, tgt_aux, nnf, int(p),
                      float(1.0 if alpha is None else alpha), out, _threads, bound, current)
    return out


def pairwise_error(key_l, key_r, tgt, f_l, f_r, p, alpha, *, fid_l=None, fid_r=None, backend=None):
    """Both pairwise-alignment error maps.

    Each map is ``alpha * d(fid[F], tgt) + d(key_l[F_l], key_r[F_r])``; the
    fidelity frames default to the keyframes themselves.
    """
    key_l, key_r, tgt = as_frame(key_l), as_frame(key_r), as_frame(tgt)
    f_l, f_r = as_field(f_l), as_field(f_r)
    fid_l = key_l if fid_l is None else as_frame(fid_l)
    fid_r = key_r if fid_r is None else as_frame(fid_r)
    _check_field(f_l, tgt.shape)
    _check_field(f_r, tgt.shape)
    if fid_l.shape != key_l.shape or fid_r.shape != key_r.shape:
        raise ValueError("fidelity frames must match their keyframes")
    out_l = np.empty(tgt.shape[:2])
    out_r = np.empty(tgt.shape[:2])
    _impl(backend).pairwise_error(key_l, key_r, fid_l, fid_r, tgt, f_l, f_r, int(p),
                                  float(alpha), out_l, out_r, _threads)
    return out_l, out_r


def remap(src, nnf, p, *, backend=None):
    src, nnf = as_frame(src), as_field(nnf)
    if nnf.ndim != 3 or nnf.shape[2] != 2:
        raise ValueError(f"bad NNF shape {nnf.shape}")
    hs, ws = src.shape[:2]
    if nnf.size and (nnf[..., 0].min() < 0 or nnf[..., 0].max() >= hs
                     or nnf[..., 1].min() < 0 or nnf[..., 1].max() >= ws):
        raise ValueError("NNF coordinates outside the source image")
    out = np.empty(nnf.shape[:2] + (3,))
    _impl(backend).remap(src, nnf, int(p), out, _threads)
    return out
