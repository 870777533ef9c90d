"""Counter-based random numbers keyed by integer tuples.

Each draw is a pure function of its key (seed, level, iteration, step, x, y,
lane), so per-pixel draws are independent of evaluation order and thread count.
The mixer is the SplitMix64 finalizer.
"""
import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
MASK64 = (1 << 64) - 1


def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def hash_key(*words):
    """Hash a key of integers or integer arrays (broadcast) to uint64."""
    with np.errstate(over="ignore"):
        h = _mix(np.asarray(0, dtype=np.uint64) + _GOLDEN)
        for w in words:
            if isinstance(w, (int, np.integer)):
                w = np.asarray(int(w) & MASK64, dtype=np.uint64)
            else:
                w = np.asarray(w).astype(np.uint64)
            h = _mix(h ^ (w + _GOLDEN))
    return h


def uniform_int(low, high, *key):
    """Integers in [low, high) per broadcast key. ``high - low`` may be an array."""
    span = np.asarray(high) - np.asarray(low)
    h = hash_key(*key)
    return (np.asarray(low) + (h % span.astype(np.uint64)).astype(np.int64)).astype(np.int64)


def pixel_grid(h, w):
    return np.arange(h)[:, None], np.arange(w)[None, :]
