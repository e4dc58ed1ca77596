"""Closed-form probabilities, union bounds and the efficiency lower-bound curve.

Every bound is evaluated in the log2 domain: the per-weight terms of the
union bounds span hundreds of orders of magnitude, so they are summed with a
base-2 log-sum-exp reduction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import special

from .errors import ArgumentError, DomainError

__all__ = [
    "BoundEvaluation",
    "LowerBoundCurvePoint",
    "binary_entropy",
    "logsumexp2",
    "p_zero",
    "p_zero_log2",
    "p_zero_exact",
    "p_zero_upper",
    "binom_entropy_bound",
    "log2_binom",
    "union_bound_binary",
    "union_bound_gaussian",
    "chi2_cdf",
    "gaussian_weight_prob",
    "efficiency_lower_bound",
    "curve_grid",
    "lindstrom_n0",
    "EXACT_UP_TO",
    "UNKNOWN_FROM",
    "ZERO_BEYOND",
]

EXACT_UP_TO = Fraction(3, 8)
UNKNOWN_FROM = Fraction(1, 2)
ZERO_BEYOND = math.log2(3) / 2
DEFAULT_U = 1.5
LOG2E = math.log2(math.e)


@dataclass
class BoundEvaluation:
    """A union bound in log2 form with its per-weight terms and split.

    ``split`` is ``(first_log2, second_log2, j_split)``: the sums over
    weights up to and beyond the split index.
    """

    value_log2: float
    params: dict
    terms: list = field(default_factory=list)
    split: tuple | None = None
    extras: dict = field(default_factory=dict)

    @property
    def value(self):
        return 2.0**self.value_log2 if self.value_log2 < 1024 else math.inf

    def to_json(self):
        out = {
            "value_log2": self.value_log2,
            "params": dict(self.params),
            "split": None
            if self.split is None
            else {"first_log2": self.split[0], "second_log2": self.split[1], "j_split": self.split[2]},
        }
        out.update(self.extras)
        return out


@dataclass(frozen=True)
class LowerBoundCurvePoint:
    zeta: float
    eta_bound: float | None
    tag: str  # exact, lower_bound, unknown or zero


def logsumexp2(values):
    """log2(sum(2**v)); -inf for an empty input."""
    v = np.asarray(list(values), dtype=np.float64)
    if v.size == 0:
        return -math.inf
    m = float(np.max(v))
    if m == -math.inf:
        return -math.inf
    return m + math.log2(float(np.sum(np.exp2(v - m))))


def binary_entropy(t):
    """Binary entropy in bits, with h(0) = h(1) = 0."""
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"binary entropy needs t in [0, 1], got {t}")
    if t == 0.0 or t == 1.0:
        return 0.0
    return -t * math.log2(t) - (1.0 - t) * math.log2(1.0 - t)


_P_TABLE = np.array([1.0, 0.5])  # index j -> p(j); index 0 unused


def _p_table(j):
    global _P_TABLE
    if j >= len(_P_TABLE):
        start = len(_P_TABLE)
        stop = max(j + 1, 2 * start)
        i = np.arange(start - 1, stop - 1, dtype=np.float64)
        factors = (2 * i + 1) / (2 * i + 2)
        ext = _P_TABLE[-1] * np.cumprod(factors)
        _P_TABLE = np.concatenate([_P_TABLE, ext])
    return _P_TABLE


def p_zero(j):
    """Probability that a signed sum of 2j random +-1 chips is zero.

    Uses p(1) = 1/2 and p(j+1) = p(j) (2j+1)/(2j+2).
    """
    j = int(j)
    if j < 1:
        raise ArgumentError("p_zero needs j >= 1")
    return float(_p_table(j)[j])


def p_zero_log2(j):
    return math.log2(p_zero(j))


def p_zero_exact(j):
    """C(2j, j) / 4^j as a Fraction."""
    j = int(j)
    if j < 1:
        raise ArgumentError("p_zero needs j >= 1")
    return Fraction(math.comb(2 * j, j), 4**j)


def p_zero_upper(j):
    """Stirling-type upper bound e / (pi sqrt(2j))."""
    if int(j) < 1:
        raise ArgumentError("p_zero_upper needs j >= 1")
    return math.e / (math.pi * math.sqrt(2.0 * j))


def log2_binom(m, r):
    return (math.lgamma(m + 1) - math.lgamma(r + 1) - math.lgamma(m - r + 1)) / math.log(2)


def binom_entropy_bound(m, r):
    """m h(r/m): log2 of the entropy upper bound on C(m, r)."""
    m, r = int(m), int(r)
    if not 0 <= r <= m:
        raise ArgumentError(f"need 0 <= r <= m, got m={m}, r={r}")
    if m == 0:
        return 0.0
    return m * binary_entropy(r / m)


def _check_u(u_exp):
    if not u_exp > 1:
        raise DomainError("split exponent u must exceed 1")


def _split(terms, j_split):
    first = logsumexp2(t for j, t in terms if j <= j_split)
    second = logsumexp2(t for j, t in terms if j > j_split)
    return (first, second, j_split)


def binary_term_log2(k, n, j, gamma=1.0):
    """log2 of the weight-2j term of the binary antipodal union bound.

    The term is ceil(N gamma/4) * 2^{K(h(2j/K) + 2j/K)} *
    [2^{4 h(gamma/4)} p(j)^{4-gamma} (1-p(j))^gamma]^{N/4}.
    """
    t = 2 * j / k
    p = p_zero(j)
    count = math.ceil(n * gamma / 4)
    inner = 4 * binary_entropy(gamma / 4) + (4 - gamma) * math.log2(p) + gamma * math.log2(1 - p)
    return math.log2(count) + k * (binary_entropy(t) + t) + (n / 4) * inner


def union_bound_binary(k, n, u_exp=DEFAULT_U, gamma=1.0):
    """Union bound on P(x^T R x < gamma for some x) for binary antipodal H.

    Sums the even-weight terms j = 1..floor(K/2) (odd weights never fall
    below 1) and splits them at j0 = floor(K / (2 (log2 K)^u)).
    """
    k, n = int(k), int(n)
    if k < 2 or n < 4:
        raise ArgumentError("union_bound_binary needs k >= 2 and n >= 4")
    if not 0 < gamma <= 1:
        raise DomainError(f"gamma must lie in (0, 1], got {gamma}")
    _check_u(u_exp)
    terms = [(j, binary_term_log2(k, n, j, gamma)) for j in range(1, k // 2 + 1)]
    j0 = math.floor(k / (2 * math.log2(k) ** u_exp))
    return BoundEvaluation(
        logsumexp2(t for _, t in terms),
        {"K": k, "N": n, "gamma": gamma, "u": u_exp},
        terms,
        _split(terms, j0),
    )


def chi2_cdf(dof, x):
    """Chi-squared CDF, the regularised lower incomplete gamma P(dof/2, x/2)."""
    if int(dof) < 1:
        raise ArgumentError("dof must be a positive integer")
    if x < 0:
        raise DomainError(f"chi2_cdf needs x >= 0, got {x}")
    return float(special.gammainc(dof / 2.0, x / 2.0))


def gaussian_weight_prob(n, j, t=1.0):
    """P(x^T R x < t) for a weight-j x under N(0, 1/N) spreading."""
    if int(j) < 1:
        raise ArgumentError("weight must be >= 1")
    if not 0 < t <= 1:
        raise DomainError(f"threshold must lie in (0, 1], got {t}")
    return chi2_cdf(n, n * t / j)


def gaussian_term_log2(k, n, j):
    """log2 of (1/2) sqrt(N/pi) C(K, j) 2^j (e^{1-1/j} / j)^{N/2}."""
    return (
        -1.0
        + 0.5 * math.log2(n / math.pi)
        + log2_binom(k, j)
        + j
        + (n / 2) * ((1 - 1 / j) * LOG2E - math.log2(j))
    )


def _gaussian_entropy_term_log2(k, n, j):
    t = j / k
    return -1.0 + 0.5 * math.log2(n / math.pi) + k * (binary_entropy(t) + t) + (n / 2) * (
        (1 - 1 / j) * LOG2E - math.log2(j)
    )


def union_bound_gaussian(k, n, u_exp=DEFAULT_U, threshold=None):
    """Bound on the weight >= 2 part of the Gaussian union bound.

    ``terms`` hold the per-weight chain with exact binomials; ``split``
    holds the two partial sums of the entropy-form bound at
    j1 = floor(K / (log2 K)^u).  With ``threshold`` set, the weight-1
    contribution 2K P(x_1^T R x_1 < threshold) is reported as ``g1_log2``.
    """
    k, n = int(k), int(n)
    if k < 2 or n < 4:
        raise ArgumentError("union_bound_gaussian needs k >= 2 and n >= 4")
    if n % 2:
        raise ArgumentError("union_bound_gaussian assumes an even chip count")
    _check_u(u_exp)
    terms = [(j, gaussian_term_log2(k, n, j)) for j in range(2, k + 1)]
    j1 = math.floor(k / math.log2(k) ** u_exp)
    ent = [(j, _gaussian_entropy_term_log2(k, n, j)) for j in range(2, k + 1)]
    extras = {}
    if threshold is not None:
        g1 = 2 * k * gaussian_weight_prob(n, 1, threshold)
        extras = {"g1_log2": math.log2(g1) if g1 > 0 else -math.inf, "g1_threshold": threshold}
    return BoundEvaluation(
        logsumexp2(t for _, t in terms),
        {"K": k, "N": n, "u": u_exp},
        terms,
        _split(ent, j1),
        extras,
    )


def efficiency_lower_bound(zeta):
    """Asymptotic lower bound on the efficiency at normalised load ``zeta``.

    1 up to 3/8, 4(1 - 2 zeta) below 1/2, unknown up to log2(3)/2 and zero
    beyond.  Exact for Fraction input; floats are converted exactly.
    """
    z = zeta if isinstance(zeta, Fraction) else Fraction(zeta)
    if z <= 0:
        raise DomainError("zeta must be positive")
    if z <= EXACT_UP_TO:
        return LowerBoundCurvePoint(float(zeta), 1.0, "exact")
    if z < UNKNOWN_FROM:
        return LowerBoundCurvePoint(float(zeta), float(4 * (1 - 2 * z)), "lower_bound")
    if float(z) <= ZERO_BEYOND:
        return LowerBoundCurvePoint(float(zeta), None, "unknown")
    return LowerBoundCurvePoint(float(zeta), 0.0, "zero")


def curve_grid(zeta_min, zeta_max, steps):
    """Multiples of zeta_max/steps lying in [zeta_min, zeta_max], as Fractions."""
    lo, hi = Fraction(str(zeta_min)), Fraction(str(zeta_max))
    steps = int(steps)
    if steps < 1 or not 0 < lo <= hi:
        raise ArgumentError("need 0 < zeta_min <= zeta_max and steps >= 1")
    h = hi / steps
    return [h * i for i in range(1, steps + 1) if h * i >= lo]


def lindstrom_n0(k):
    """Asymptotic minimal detecting-matrix row count 2K / log2 K (reference line)."""
    if int(k) < 2:
        raise ArgumentError("lindstrom_n0 needs k >= 2")
    return 2 * k / math.log2(k)
