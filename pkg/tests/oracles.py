"""Slow, independent reference implementations used only by the tests.

Nothing here calls the library's search kernels: the efficiency oracle is a
plain itertools loop over the integer (or float) columns.
"""

import itertools
from fractions import Fraction

import numpy as np


def canonical_vectors(k):
    """Canonical ternary vectors (first nonzero entry +1) in lexicographic order."""
    for x in itertools.product((-1, 0, 1), repeat=k):
        nz = next((v for v in x if v), 0)
        if nz == 1:
            yield x


def exact_columns(h):
    """Integer coordinate columns and the scale s with x^T R x = ||Zx||^2 / s."""
    z = [[int(v) for v in row] for row in h.integer_coords]
    return z, h.quadratic_scale


def eta_exact_oracle(h):
    """(min x^T R x as a Fraction, lexicographically first canonical argmin)."""
    z, s = exact_columns(h)
    k = h.n_users
    best, arg = None, None
    for x in canonical_vectors(k):
        q = 0
        for row in z:
            u = sum(row[j] * x[j] for j in range(k))
            q += u * u
        if best is None or q < best:
            best, arg = q, x
    return Fraction(best, s), arg


def eta_float_oracle(h):
    a = np.asarray(h.real_stack, dtype=np.float64)
    xs = np.array(list(canonical_vectors(h.n_users)), dtype=np.float64)
    u = xs @ a.T
    q = np.einsum("ij,ij->i", u, u)
    i = int(np.argmin(q))
    return float(q[i]), tuple(int(v) for v in xs[i])


def has_ternary_null_vector(h):
    z, _ = exact_columns(h)
    for x in canonical_vectors(h.n_users):
        if all(sum(r * v for r, v in zip(row, x)) == 0 for row in z):
            return True
    return False


def ml_oracle(a, y):
    """Exhaustive ML decision, +1 ranked before -1 on ties."""
    best, arg = None, None
    for b in itertools.product((1, -1), repeat=a.shape[1]):
        d = y - a @ np.array(b, dtype=float)
        m = float(d @ d)
        if best is None or m < best:
            best, arg = m, b
    return np.array(arg)
