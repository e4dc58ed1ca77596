"""Counter-based random streams.

Every random quantity in the package is a pure function of a 64-bit key and
an integer counter, so a matrix entry or a Monte Carlo trial never depends on
generation order or on how work is split between threads.  The mixing
function is the splitmix64 finalizer applied twice.
"""

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_TWO_PI = 2.0 * np.pi


def _mix_int(z):
    z &= _MASK
    z = ((z ^ (z >> 30)) * _M1) & _MASK
    z = ((z ^ (z >> 27)) * _M2) & _MASK
    return z ^ (z >> 31)


def _mix_array(z):
    z = z ^ (z >> np.uint64(30))
    z = z * np.uint64(_M1)
    z = z ^ (z >> np.uint64(27))
    z = z * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def derive_key(*words):
    """Fold integers and strings into one 64-bit stream key."""
    h = 0x243F6A8885A308D3
    for w in words:
        if isinstance(w, str):
            w = int.from_bytes(w.encode("utf-8")[:8].ljust(8, b"\0"), "little")
        h = _mix_int(h ^ ((int(w) + _GOLDEN) & _MASK))
        h = _mix_int(h + _GOLDEN)
    return h


def random_bits(key, counters):
    """Return uint64 words for the given counters (any integer array)."""
    c = np.asarray(counters, dtype=np.uint64)
    x = c * np.uint64(_GOLDEN) + np.uint64(key & _MASK)
    return _mix_array(_mix_array(x))


def uniforms(key, counters):
    """Doubles on [0, 1) with 53 random bits each."""
    return (random_bits(key, counters) >> np.uint64(11)).astype(np.float64) * 2.0**-53


def normals(key, counters):
    """Standard normal deviates by Box-Muller over two derived streams."""
    c = np.asarray(counters, dtype=np.uint64)
    b1 = random_bits(derive_key(key, "bm-r"), c) >> np.uint64(11)
    b2 = random_bits(derive_key(key, "bm-t"), c) >> np.uint64(11)
    u1 = (b1.astype(np.float64) + 1.0) * 2.0**-53  # (0, 1]
    u2 = b2.astype(np.float64) * 2.0**-53
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(_TWO_PI * u2)


def grid_counters(rows, cols):
    """Counters for an array of shape (rows, cols); entry (i, j) gets (i << 32) | j."""
    r = np.arange(rows, dtype=np.uint64)[:, None] << np.uint64(32)
    return r | np.arange(cols, dtype=np.uint64)[None, :]


def trial_seed(base_seed, point, trial):
    """Seed of one Monte Carlo trial, independent of scheduling."""
    return derive_key(base_seed, "trial", point, trial)
