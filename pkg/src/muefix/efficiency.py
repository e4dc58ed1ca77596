"""Optimum asymptotic multiuser efficiency and exact ML detection.

The efficiency of a spreading matrix H is the minimum of x^T R x = ||Hx||^2
over nonzero error vectors x in {-1, 0, +1}^K.  Two independent searches are
provided: exhaustive Gray-code enumeration and an LDL^T branch-and-bound.
For exact matrices both evaluate ||Hx||^2 as an exact integer over the
unscaled coordinates and return the value as a ``Fraction``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache

import numpy as np

from . import _kernels
from .errors import ArgumentError, CapacityError

__all__ = [
    "TernaryVector",
    "EfficiencyResult",
    "DEFAULT_CAP",
    "eta_for_error_vector",
    "eta_bruteforce",
    "eta_branch_bound",
    "eta",
    "min_over_weight",
    "ml_detect",
    "ml_detect_batch",
]

DEFAULT_CAP = 20
PIVOT_THRESHOLD = 1e-10
_INT_LIMIT = 2**62


@dataclass(frozen=True)
class TernaryVector:
    """Error vector in {-1, 0, +1}^K, stored in canonical form.

    The canonical representative of the pair {x, -x} has its first nonzero
    entry equal to +1; the constructor flips the sign when needed.
    """

    entries: tuple

    def __post_init__(self):
        e = tuple(int(v) for v in self.entries)
        if any(v not in (-1, 0, 1) for v in e):
            raise ArgumentError("ternary vector entries must be -1, 0 or +1")
        first = next((v for v in e if v), 1)
        if first < 0:
            e = tuple(-v for v in e)
        object.__setattr__(self, "entries", e)

    @cached_property
    def weight(self):
        return sum(1 for v in self.entries if v)

    def __len__(self):
        return len(self.entries)

    def as_array(self):
        return np.array(self.entries, dtype=np.int64)

    def to_json(self):
        return list(self.entries)


@dataclass(frozen=True)
class EfficiencyResult:
    eta: float
    argmin: TernaryVector
    vectors_examined: int
    nodes_pruned: int
    method_tag: str
    eta_exact: Fraction | None = None

    def to_json(self):
        out = {
            "eta": self.eta,
            "argmin": self.argmin.to_json(),
            "examined": self.vectors_examined,
            "pruned": self.nodes_pruned,
            "method": self.method_tag,
        }
        if self.eta_exact is not None:
            out["eta_exact"] = str(self.eta_exact)
        return out


def _as_ternary_array(x, k):
    arr = np.asarray(x.entries if isinstance(x, TernaryVector) else x, dtype=np.int64)
    if arr.ndim != 1 or arr.shape[0] != k:
        raise ArgumentError(f"error vector must have length {k}")
    if np.any((arr < -1) | (arr > 1)):
        raise ArgumentError("error vector entries must be -1, 0 or +1")
    if not arr.any():
        raise ArgumentError("error vector must be nonzero")
    return arr


def _search_matrix(h):
    """(M, inv_scale, scale) for the searches; M is int64 on the exact path."""
    if h.exact_quadratic:
        z = h.integer_coords
        bound = z.shape[0] * (int(np.abs(z).max()) * h.n_users) ** 2
        if bound < _INT_LIMIT:
            s = h.quadratic_scale
            return np.ascontiguousarray(z, dtype=np.int64), 1.0 / s, s
    return np.ascontiguousarray(h.real_stack, dtype=np.float64), 1.0, None


def eta_for_error_vector(h, x):
    """x^T R x = ||Hx||^2; an exact ``Fraction`` for exact matrices, else float."""
    arr = _as_ternary_array(x, h.n_users)
    if h.exact_quadratic:
        z = h.integer_coords
        u = [sum(int(z[r, j]) * int(arr[j]) for j in np.flatnonzero(arr)) for r in range(z.shape[0])]
        return Fraction(sum(v * v for v in u), h.quadratic_scale)
    u = h.real_stack @ arr.astype(np.float64)
    return float(u @ u)


def _result(h, value, x, examined, pruned, method, scale):
    vec = TernaryVector(tuple(int(v) for v in x))
    if scale is not None:
        exact = Fraction(int(value), scale)
        return EfficiencyResult(float(exact), vec, int(examined), int(pruned), method, exact)
    # recompute from scratch so equal argmins give bit-identical values
    return EfficiencyResult(eta_for_error_vector(h, vec), vec, int(examined), int(pruned), method)


def eta_bruteforce(h, cap=DEFAULT_CAP):
    """Exact minimum by enumerating all (3^K - 1)/2 canonical ternary vectors."""
    k = h.n_users
    if k > cap:
        raise CapacityError(f"brute force over 3^{k} vectors exceeds cap K <= {cap}")
    m, _, scale = _search_matrix(h)
    value, x, examined = _kernels.gray_min(m, False)
    return _result(h, value, x, examined, 0, "brute_force", scale)


def _ldl(r):
    """Unpivoted LDL^T; returns (L, D) or None if a pivot is too small."""
    k = r.shape[0]
    L = np.eye(k)
    D = np.zeros(k)
    ref = max(float(np.max(np.diag(r))), np.finfo(float).tiny)
    for j in range(k):
        D[j] = r[j, j] - np.dot(L[j, :j] ** 2, D[:j])
        if not D[j] > PIVOT_THRESHOLD * ref:
            return None
        for i in range(j + 1, k):
            L[i, j] = (r[i, j] - np.dot(L[i, :j] * L[j, :j], D[:j])) / D[j]
    return L, D


def eta_branch_bound(h, cap=DEFAULT_CAP):
    """Exact minimum by depth-first branch-and-bound on the LDL^T factors of R.

    Falls back to the Gray-code enumeration (subject to ``cap``) when R is
    rank deficient (K > rows) or its smallest pivot is below 1e-10 of the
    largest diagonal entry, since the pruning bound is invalid there.
    """
    m, inv_scale, scale = _search_matrix(h)
    k = h.n_users
    fact = None
    if m.shape[0] >= k:
        r = (m.T.astype(np.float64) @ m.astype(np.float64)) * inv_scale
        fact = _ldl((r + r.T) / 2)
    if fact is None:
        if k > cap:
            raise CapacityError(f"rank-deficient R needs brute force over 3^{k} vectors (cap {cap})")
        value, x, examined = _kernels.gray_min(m, False)
        return _result(h, value, x, examined, 0, "branch_bound", scale)
    L, D = fact
    tol = 1e-8 * max(1.0, float(np.max(np.diag(r))))
    value, x, examined, pruned = _kernels.branch_bound_min(m, np.ascontiguousarray(L.T), D, inv_scale, tol)
    return _result(h, value, x, examined, pruned, "branch_bound", scale)


def eta(h, method="branch_bound", cap=DEFAULT_CAP):
    if method == "branch_bound":
        return eta_branch_bound(h, cap)
    if method == "brute_force":
        return eta_bruteforce(h, cap)
    raise ArgumentError(f"unknown method {method!r}")


@lru_cache(maxsize=64)
def _sign_patterns(w):
    # first sign fixed to +1 (canonical), the rest free
    pats = [(1,) + p for p in itertools.product((1, -1), repeat=w - 1)]
    return np.array(pats, dtype=np.int64)


def min_over_weight(h, w):
    """Minimum of x^T R x over canonical vectors of weight exactly ``w``."""
    k = h.n_users
    if not 1 <= int(w) <= k:
        raise ArgumentError(f"weight must be in 1..{k}, got {w}")
    w = int(w)
    m, _, scale = _search_matrix(h)
    supports = np.array(list(itertools.combinations(range(k), w)), dtype=np.int64)
    value, _, _ = _kernels.weight_min(m, supports, _sign_patterns(w))
    if scale is not None:
        return Fraction(int(value), scale)
    return float(value)


@lru_cache(maxsize=32)
def _bpsk_candidates(k):
    # lexicographic with +1 ranked before -1
    return np.array(list(itertools.product((1, -1), repeat=k)), dtype=np.float64)


def _stack_y(h, y):
    y = np.asarray(y)
    if np.iscomplexobj(h.entries_float) or np.iscomplexobj(y):
        y = np.concatenate([y.real, y.imag], axis=-1)
    return np.asarray(y, dtype=np.float64)


def ml_detect_batch(h, ys, cap=DEFAULT_CAP):
    """Jointly optimal decisions for each row of ``ys`` (shape T x N)."""
    k = h.n_users
    if k > cap:
        raise CapacityError(f"ML detection over 2^{k} candidates exceeds cap K <= {cap}")
    a = h.real_stack
    ys = _stack_y(h, ys)
    if ys.ndim == 1:
        ys = ys[None, :]
    if k == 1:
        # closed form: sign of the matched filter, ties to +1
        mf = ys @ a[:, 0]
        return np.where(mf >= 0, 1, -1).astype(np.int64)[:, None]
    cands = _bpsk_candidates(k)
    out = np.empty((ys.shape[0], k), dtype=np.int64)
    chunk = max(64, (1 << 22) // ys.shape[0])  # bounds the T x C metric block
    for c0 in range(0, len(cands), chunk):
        block = cands[c0 : c0 + chunk]
        hb = block @ a.T  # (C, rows)
        energy = np.einsum("ij,ij->i", hb, hb)
        metric = energy[None, :] - 2.0 * (ys @ hb.T)  # ||y - Hb||^2 - ||y||^2
        idx = np.argmin(metric, axis=1)
        best = metric[np.arange(len(idx)), idx]
        if c0 == 0:
            best_metric = best
            out[:] = block[idx].astype(np.int64)
        else:
            better = best < best_metric
            best_metric = np.where(better, best, best_metric)
            out[better] = block[idx[better]].astype(np.int64)
    return out


def ml_detect(h, y, cap=DEFAULT_CAP):
    """argmin over b in {+-1}^K of ||y - Hb||^2 (ties: lexicographic, +1 first)."""
    y = np.asarray(y)
    n = h.n_chips
    if y.shape != (n,):
        raise ArgumentError(f"received vector must have length {n}")
    return ml_detect_batch(h, y, cap)[0]
