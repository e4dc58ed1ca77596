"""Compiled inner loops for the ternary quadratic-form searches.

Both kernels work on a matrix ``M`` (rows x K) and minimise ``||M x||^2``
over nonzero x in {-1, 0, +1}^K.  ``M`` is either int64 (exact path, values
are then exact integers) or float64.  Ties are broken towards the
lexicographically smallest canonical vector, ordering -1 < 0 < +1.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _lex_less_canonical(x, best):
    # compare canonical(x) with best (already canonical)
    s = 0
    for i in range(x.shape[0]):
        if x[i] != 0:
            s = 1 if x[i] > 0 else -1
            break
    for i in range(x.shape[0]):
        v = s * x[i]
        if v != best[i]:
            return v < best[i]
    return False


@njit(cache=True, nogil=True)
def _store_canonical(x, out):
    s = 0
    for i in range(x.shape[0]):
        if x[i] != 0:
            s = 1 if x[i] > 0 else -1
            break
    for i in range(x.shape[0]):
        out[i] = s * x[i]


@njit(cache=True, nogil=True)
def gray_min(M, stop_at_zero):
    """Exhaustive minimum over the (3^K - 1)/2 canonical ternary vectors.

    Canonical vectors with first nonzero coordinate p are visited in one
    block: x_p = +1 and the suffix runs through a reflected ternary Gray
    code, so each step changes one coordinate by one and updates u = M x
    in O(rows).  Returns (best value, best vector, vectors examined).
    """
    rows, K = M.shape
    x = np.zeros(K, np.int64)
    best_x = np.zeros(K, np.int64)
    direction = np.ones(K, np.int64)
    moves = np.zeros(K, np.int64)
    u = np.zeros(rows, M.dtype)
    best = M[0, 0] * M[0, 0]
    have = False
    examined = 0
    for p in range(K):
        for q in range(K):
            x[q] = 0
            direction[q] = 1
            moves[q] = 0
        x[p] = 1
        for r in range(rows):
            u[r] = M[r, p]
        for q in range(p + 1, K):
            x[q] = -1
            for r in range(rows):
                u[r] -= M[r, q]
        total = 1
        for _ in range(K - 1 - p):
            total *= 3
        for t in range(total):
            if t > 0:
                i = 0
                tt = t
                while tt % 3 == 0:
                    tt //= 3
                    i += 1
                q = p + 1 + i
                d = direction[q]
                x[q] += d
                for r in range(rows):
                    u[r] += d * M[r, q]
                moves[q] += 1
                if moves[q] % 2 == 0:
                    direction[q] = -d
            val = u[0] * u[0]
            for r in range(1, rows):
                val += u[r] * u[r]
            examined += 1
            if not have or val < best or (val == best and _lex_less_canonical(x, best_x)):
                best = val
                have = True
                for q in range(K):
                    best_x[q] = x[q]
            if stop_at_zero and val == 0:
                return best, best_x, examined
    return best, best_x, examined


@njit(cache=True, nogil=True)
def branch_bound_min(M, Lt, D, inv_scale, tol):
    """Depth-first search over x from the last coordinate down.

    ``Lt[i, j]`` (j > i) are the entries of L^T for R = L diag(D) L^T, so the
    quadratic form is sum_i D_i (x_i + sum_{j>i} Lt[i, j] x_j)^2 and every
    partial sum is a lower bound.  The highest-index nonzero coordinate is
    forced to +1.  Leaves are evaluated from u = M x (exact for int64 M);
    a subtree is cut when its float bound exceeds incumbent + tol.
    Returns (best value, best canonical vector, leaves examined, cuts).
    """
    rows, K = M.shape
    x = np.zeros(K, np.int64)
    u = np.zeros(rows, M.dtype)
    cand = np.zeros((K, 3), np.int64)
    ncand = np.zeros(K, np.int64)
    pos = np.zeros(K, np.int64)
    center = np.zeros(K)
    partial = np.zeros(K + 1)
    best_x = np.zeros(K, np.int64)
    best = M[0, 0] * M[0, 0]
    have = False
    best_f = np.inf
    nnz = 0
    examined = 0
    pruned = 0

    i = K - 1
    center[i] = 0.0
    cand[i, 0] = 0
    cand[i, 1] = 1
    ncand[i] = 2
    pos[i] = 0
    while True:
        if x[i] != 0:
            for r in range(rows):
                u[r] -= x[i] * M[r, i]
            nnz -= 1
            x[i] = 0
        if pos[i] >= ncand[i]:
            i += 1
            if i == K:
                break
            continue
        xi = cand[i, pos[i]]
        pos[i] += 1
        diff = xi - center[i]
        cost = partial[i + 1] + D[i] * diff * diff
        if have and cost > best_f + tol:
            pruned += 1
            pos[i] = ncand[i]
            continue
        if xi != 0:
            x[i] = xi
            for r in range(rows):
                u[r] += xi * M[r, i]
            nnz += 1
        if i == 0:
            if nnz == 0:
                continue
            examined += 1
            val = u[0] * u[0]
            for r in range(1, rows):
                val += u[r] * u[r]
            if not have or val < best or (val == best and _lex_less_canonical(x, best_x)):
                best = val
                have = True
                best_f = val * inv_scale
                _store_canonical(x, best_x)
            continue
        partial[i] = cost
        i -= 1
        c = 0.0
        for j in range(i + 1, K):
            c -= Lt[i, j] * x[j]
        center[i] = c
        if nnz == 0:
            # sign symmetry: the top nonzero coordinate is +1
            if abs(c) <= abs(1.0 - c):
                cand[i, 0] = 0
                cand[i, 1] = 1
            else:
                cand[i, 0] = 1
                cand[i, 1] = 0
            ncand[i] = 2
        else:
            # Schnorr-Euchner order: nearest to the centre first
            d0 = abs(-1.0 - c)
            d1 = abs(c)
            d2 = abs(1.0 - c)
            a0, a1, a2 = -1, 0, 1
            if d1 < d0:
                d0, d1 = d1, d0
                a0, a1 = a1, a0
            if d2 < d1:
                d1, d2 = d2, d1
                a1, a2 = a2, a1
            if d1 < d0:
                d0, d1 = d1, d0
                a0, a1 = a1, a0
            cand[i, 0] = a0
            cand[i, 1] = a1
            cand[i, 2] = a2
            ncand[i] = 3
        pos[i] = 0
    return best, best_x, examined, pruned


@njit(cache=True, nogil=True)
def weight_min(M, supports, signs):
    """Minimum of ||M x||^2 over x with the given supports and sign patterns."""
    rows = M.shape[0]
    w = supports.shape[1]
    best = M[0, 0] * M[0, 0]
    best_s = -1
    best_g = -1
    u = np.zeros(rows, M.dtype)
    for s in range(supports.shape[0]):
        for g in range(signs.shape[0]):
            for r in range(rows):
                acc = M[r, supports[s, 0]] * signs[g, 0]
                for t in range(1, w):
                    acc += M[r, supports[s, t]] * signs[g, t]
                u[r] = acc
            val = u[0] * u[0]
            for r in range(1, rows):
                val += u[r] * u[r]
            if best_s < 0 or val < best:
                best = val
                best_s = s
                best_g = g
    return best, best_s, best_g
