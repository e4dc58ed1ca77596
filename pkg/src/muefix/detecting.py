"""Exact detecting-matrix checks for finite-alphabet spreading matrices.

For binary inputs {a, b} with a != b, H is detecting iff no nonzero
x in {-1, 0, +1}^K satisfies Hx = 0; the input values themselves never
enter the test.  The search is an exact meet-in-the-middle over the integer
coordinate matrix.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels, rng
from .efficiency import TernaryVector, _as_ternary_array
from .errors import ArgumentError, UnsupportedEnsembleError
from .matrix import Alphabet, alphabet_rank

__all__ = [
    "DetectingVerdict",
    "DEFAULT_TABLE_CAP",
    "is_detecting",
    "is_detecting_for_inputs",
    "verify_witness",
    "row_zero_prob",
    "detecting_threshold",
    "wilson_interval",
]

DEFAULT_TABLE_CAP = 1 << 22


@dataclass(frozen=True)
class DetectingVerdict:
    is_detecting: bool
    witness: TernaryVector | None
    search_cost: int

    def to_json(self):
        return {
            "detecting": self.is_detecting,
            "witness": None if self.witness is None else self.witness.to_json(),
            "cost": self.search_cost,
        }


def _require_exact(h):
    if not h.is_exact:
        raise UnsupportedEnsembleError(
            f"{h.ensemble} matrix has no exact representation; detecting checks need a finite alphabet"
        )
    return h.integer_coords


def _ternary_block(m):
    """All vectors of {-1, 0, 1}^m in lexicographic order, shape (3^m, m)."""
    if m == 0:
        return np.zeros((1, 0), dtype=np.int64)
    return np.array(list(itertools.product((-1, 0, 1), repeat=m)), dtype=np.int64)


def is_detecting(h, table_cap=DEFAULT_TABLE_CAP):
    """Search for a nonzero ternary null vector of H in exact arithmetic.

    The first ceil(K/2) columns are enumerated into a hash table keyed by
    the byte encoding of their integer partial sums; the remaining columns
    are enumerated in lexicographic order and probed with the negated sum.
    The first hit is returned as the witness.  When the table would exceed
    ``table_cap`` entries the search falls back to an exhaustive scan with
    early exit at the first null vector.
    """
    z = _require_exact(h)
    k = h.n_users
    a = (k + 1) // 2
    b = k - a
    if 3**a > table_cap:
        value, x, examined = _kernels.gray_min(np.ascontiguousarray(z, dtype=np.int64), True)
        if value == 0:
            return DetectingVerdict(False, TernaryVector(tuple(int(v) for v in x)), int(examined))
        return DetectingVerdict(True, None, int(examined))

    left = _ternary_block(a)
    zl, zr = z[:, :a], z[:, a:]
    table = {}
    zero_left = None  # first nonzero left vector whose partial sum vanishes
    chunk = 1 << 15
    for c0 in range(0, len(left), chunk):
        sums = left[c0 : c0 + chunk] @ zl.T
        for i, row in enumerate(sums):
            key = row.tobytes()
            idx = c0 + i
            if key not in table:
                table[key] = idx
            if zero_left is None and not row.any() and left[idx].any():
                zero_left = idx
    cost = len(left)
    right = _ternary_block(b)
    for c0 in range(0, len(right), chunk):
        sums = -(right[c0 : c0 + chunk] @ zr.T) if b else np.zeros((1, z.shape[0]), np.int64)
        for i, row in enumerate(sums):
            cost += 1
            r = right[c0 + i]
            hit = table.get(row.tobytes())
            if hit is None:
                continue
            if not r.any():
                if zero_left is None:
                    continue
                hit = zero_left
            x = np.concatenate([left[hit], r])
            return DetectingVerdict(False, TernaryVector(tuple(int(v) for v in x)), cost)
    return DetectingVerdict(True, None, cost)


def is_detecting_for_inputs(h, a, b, table_cap=DEFAULT_TABLE_CAP):
    """Detecting test for the binary input set {a, b}; only a != b matters."""
    if a == b:
        raise ArgumentError("binary input set needs two distinct values")
    return is_detecting(h, table_cap)


def verify_witness(h, x):
    """True iff H x = 0 exactly."""
    z = _require_exact(h)
    if len(x) != h.n_users:
        raise ArgumentError(f"witness must have length {h.n_users}")
    arr = _as_ternary_array(x, h.n_users)
    cols = np.flatnonzero(arr)
    for row in z:
        if sum(int(row[j]) * int(arr[j]) for j in cols) != 0:
            return False
    return True


def wilson_interval(successes, trials, z=1.959963984540054):
    """Wilson score interval; with zero successes the upper end is 3/n."""
    if trials <= 0:
        raise ArgumentError("trials must be positive")
    p = successes / trials
    if successes == 0:
        return 0.0, min(1.0, 3.0 / trials)
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, min(p, centre - half)), min(1.0, max(p, centre + half))


def row_zero_prob(alphabet, j, trials, seed, batch=1 << 16):
    """Monte Carlo estimate of P(sum_i H_ri x(i) = 0) for a weight-j x.

    The weight-j vector uses alternating signs; by symmetry only the weight
    matters.  Returns (estimate, half width of the 95% Wilson interval).
    """
    if not isinstance(alphabet, Alphabet):
        raise ArgumentError("alphabet must be an Alphabet")
    j, trials = int(j), int(trials)
    if j < 1:
        raise ArgumentError("weight must be >= 1")
    if trials < 1000:
        raise ArgumentError("row_zero_prob needs at least 1000 trials")
    coords = alphabet.int_coords
    cum = np.cumsum([float(p) for p in alphabet.probabilities])
    signs = np.where(np.arange(j) % 2 == 0, 1, -1).astype(np.int64)
    key = rng.derive_key(seed, "row-zero", j)
    zeros = 0
    for t0 in range(0, trials, batch):
        t1 = min(trials, t0 + batch)
        ctr = rng.grid_counters(t1 - t0, j) + (np.uint64(t0) << np.uint64(32))
        idx = np.minimum(np.searchsorted(cum, rng.uniforms(key, ctr), side="right"), len(cum) - 1)
        sums = (coords[idx] * signs[None, :, None]).sum(axis=1)
        zeros += int(np.count_nonzero(~sums.any(axis=1)))
    lo, hi = wilson_interval(zeros, trials)
    return zeros / trials, (hi - lo) / 2


def detecting_threshold(alphabet):
    """Largest normalised load rank(alphabet)/2 below which random matrices are detecting."""
    return alphabet_rank(alphabet) / 2
