"""Random spreading matrices, Gram matrices and alphabet metadata.

Three ensembles are supported: binary antipodal (entries +-1/sqrt(N)),
Gaussian (entries N(0, 1/N)) and i.i.d. draws from a finite symmetric
alphabet.  Finite-alphabet matrices keep an exact representation (symbol
indices) next to the floating one; exact arithmetic always works on the
unscaled integer coordinates and the 1/sqrt(N) style factor is only applied
to ``entries_float``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from . import rng
from .errors import AlphabetError, ArgumentError

__all__ = [
    "Alphabet",
    "SpreadingMatrix",
    "GramMatrix",
    "BINARY",
    "QPSK",
    "PM1_PM2",
    "SPARSE_TERNARY",
    "named_alphabet",
    "gen_binary_antipodal",
    "gen_gaussian",
    "gen_finite_alphabet",
    "generate",
    "gram",
    "alphabet_rank",
    "rational_rank",
    "log3",
    "zeta",
    "chips_for_zeta",
]

ENSEMBLES = ("binary_antipodal", "gaussian", "finite_alphabet")
SCALE_RULES = {"sqrt_n": 1, "sqrt_2n": 2, "none": 0}
MAX_SEED = (1 << 64) - 1


def _frac(v):
    if isinstance(v, float):
        return Fraction(repr(v))
    return Fraction(v)


def _coords(s):
    if isinstance(s, (tuple, list)):
        return tuple(_frac(c) for c in s)
    return (_frac(s),)


@dataclass(frozen=True)
class Alphabet:
    """Finite symbol set with exact rational coordinates over a declared basis.

    Each symbol is a tuple of rational coordinates; its value is
    ``sum(c_i * basis_i)``.  The basis elements are assumed linearly
    independent over the rationals; checking that is left to the caller.
    Complex alphabets use the basis ``(1, 1j)``.

    Parameters
    ----------
    symbols : sequence
        Symbols, each a number or a tuple of coordinates.
    probabilities : sequence
        Exact probabilities (ints, Fractions, strings like ``"1/4"`` or
        decimal floats).
    basis : sequence of complex, optional
        Values of the basis directions.
    scale_rule : {"sqrt_n", "sqrt_2n", "none"}
        Per-entry normalisation applied to floating entries at generation.
    """

    symbols: tuple
    probabilities: tuple
    basis: tuple = (1.0,)
    scale_rule: str = "sqrt_n"
    name: str | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(_coords(s) for s in self.symbols))
        object.__setattr__(self, "probabilities", tuple(_frac(p) for p in self.probabilities))
        object.__setattr__(self, "basis", tuple(complex(b) for b in self.basis))
        failed = self.violations()
        if failed:
            raise AlphabetError(failed)

    @classmethod
    def uniform(cls, symbols, **kw):
        symbols = list(symbols)
        return cls(symbols, [Fraction(1, len(symbols))] * len(symbols), **kw)

    def violations(self):
        """Names of the invariants that fail (empty when valid)."""
        failed = []
        d = len(self.basis)
        if not self.symbols or len(self.symbols) != len(self.probabilities):
            return ["one probability per symbol"]
        if self.scale_rule not in SCALE_RULES:
            failed.append(f"scale_rule in {sorted(SCALE_RULES)}")
        if any(len(s) != d for s in self.symbols):
            failed.append("coordinate count matches basis")
            return failed
        if len(set(self.symbols)) != len(self.symbols):
            failed.append("symbols distinct")
        if any(p <= 0 for p in self.probabilities):
            failed.append("probabilities positive")
        if sum(self.probabilities) != 1:
            failed.append("probabilities sum to 1")
        prob = dict(zip(self.symbols, self.probabilities))
        if any(prob.get(tuple(-c for c in s)) != p for s, p in prob.items()):
            failed.append("symmetric")
        mean = [sum(p * s[i] for s, p in prob.items()) for i in range(d)]
        if any(m != 0 for m in mean):
            failed.append("zero mean")
        zero = tuple(Fraction(0) for _ in range(d))
        if prob.get(zero, 0) >= 1:
            failed.append("non-degenerate")
        return failed

    @property
    def dim(self):
        return len(self.basis)

    @property
    def is_complex(self):
        return any(b.imag != 0 for b in self.basis)

    @property
    def orthonormal_basis(self):
        """True when the basis is orthonormal as vectors of R^2.

        Only then is |value|^2 a rational function of the coordinates, which
        the exact quadratic-form path relies on.
        """
        pts = [(b.real, b.imag) for b in self.basis]
        for i, a in enumerate(pts):
            for j, b in enumerate(pts):
                dot = a[0] * b[0] + a[1] * b[1]
                if abs(dot - (1.0 if i == j else 0.0)) > 1e-15:
                    return False
        return True

    @cached_property
    def denominator(self):
        den = 1
        for s in self.symbols:
            for c in s:
                den = math.lcm(den, c.denominator)
        return den

    @cached_property
    def int_coords(self):
        """Symbol coordinates times ``denominator``, shape (m, dim)."""
        den = self.denominator
        return np.array([[int(c * den) for c in s] for s in self.symbols], dtype=np.int64)

    @cached_property
    def values(self):
        vals = np.array(
            [sum(float(c) * b for c, b in zip(s, self.basis)) for s in self.symbols]
        )
        return vals if self.is_complex else vals.real.astype(np.float64)

    def scale_square(self, n):
        """Integer c*n such that float entries are value / sqrt(c*n)."""
        c = SCALE_RULES[self.scale_rule]
        return c * n if c else 1

    def to_json(self):
        return {
            "symbols": [[str(c) for c in s] for s in self.symbols],
            "probabilities": [str(p) for p in self.probabilities],
            "basis": [[b.real, b.imag] for b in self.basis],
            "scale_rule": self.scale_rule,
            "name": self.name,
        }

    @classmethod
    def from_json(cls, obj):
        basis = [complex(*b) if isinstance(b, (list, tuple)) else complex(b) for b in obj.get("basis", [1.0])]
        return cls(
            obj["symbols"],
            obj["probabilities"],
            basis=tuple(basis),
            scale_rule=obj.get("scale_rule", "sqrt_n"),
            name=obj.get("name"),
        )


BINARY = Alphabet.uniform([1, -1], name="pm1")
QPSK = Alphabet.uniform(
    [(1, 1), (1, -1), (-1, 1), (-1, -1)], basis=(1, 1j), scale_rule="sqrt_2n", name="qpsk"
)
PM1_PM2 = Alphabet.uniform([1, -1, 2, -2], name="pm1pm2")
SPARSE_TERNARY = Alphabet(
    [1, 0, -1], [Fraction(1, 4), Fraction(1, 2), Fraction(1, 4)], name="sparse_ternary"
)
_NAMED = {a.name: a for a in (BINARY, QPSK, PM1_PM2, SPARSE_TERNARY)}


def named_alphabet(name):
    """Look up a built-in alphabet (pm1, qpsk, pm1pm2, sparse_ternary)."""
    try:
        return _NAMED[name]
    except KeyError:
        raise ArgumentError(f"unknown alphabet {name!r}; choose from {sorted(_NAMED)}") from None


@dataclass(frozen=True, eq=False)
class SpreadingMatrix:
    """N x K spreading matrix with optional exact representation.

    ``entries_exact`` holds symbol indices into ``alphabet.symbols`` and is
    present iff the matrix was drawn from (or built over) a finite alphabet.
    """

    n_chips: int
    n_users: int
    entries_float: np.ndarray
    ensemble: str
    seed: int = 0
    entries_exact: np.ndarray | None = None
    alphabet: Alphabet | None = None

    def __post_init__(self):
        self.entries_float.setflags(write=False)
        if self.entries_exact is not None:
            self.entries_exact.setflags(write=False)

    @property
    def shape(self):
        return (self.n_chips, self.n_users)

    @property
    def is_exact(self):
        return self.entries_exact is not None

    @property
    def exact_quadratic(self):
        """True when ||Hx||^2 can be evaluated in exact arithmetic."""
        return self.is_exact and self.alphabet.orthonormal_basis

    @cached_property
    def integer_coords(self):
        """Integer coordinate matrix of shape (dim*N, K), coordinate-major.

        Row ``c*N + i`` holds coordinate ``c`` of entry row ``i``, scaled by
        the alphabet denominator.  ``H x = 0`` iff this matrix kills ``x``.
        """
        if not self.is_exact:
            return None
        ic = self.alphabet.int_coords[self.entries_exact]  # (N, K, d)
        z = np.ascontiguousarray(np.moveaxis(ic, 2, 0).reshape(-1, self.n_users))
        z.setflags(write=False)
        return z

    @property
    def integer_entries(self):
        """Unscaled integer entries for one-coordinate alphabets (e.g. +-1)."""
        if not self.is_exact or self.alphabet.dim != 1:
            return None
        return self.integer_coords

    @property
    def quadratic_scale(self):
        """Integer s with ||Hx||^2 = ||Zx||^2 / s for Z = integer_coords."""
        if not self.exact_quadratic:
            return None
        return self.alphabet.denominator**2 * self.alphabet.scale_square(self.n_chips)

    @cached_property
    def real_stack(self):
        """Real matrix A with ||Ax|| = ||Hx|| for real x ([Re H; Im H] if complex)."""
        h = self.entries_float
        if np.iscomplexobj(h):
            a = np.vstack([h.real, h.imag])
        else:
            a = np.array(h, dtype=np.float64)
        a.setflags(write=False)
        return a

    @classmethod
    def from_exact(cls, values, scale_rule="sqrt_n", seed=0):
        """Build an exact matrix from an integer/rational array (tests, examples).

        The alphabet is the uniform distribution on the symmetric closure of
        the values present.
        """
        rows = [[_frac(v) for v in row] for row in values]
        n, k = len(rows), len(rows[0])
        distinct = sorted({v for row in rows for v in row} | {-v for row in rows for v in row}, reverse=True)
        alpha = Alphabet.uniform(distinct, scale_rule=scale_rule)
        index = {s: i for i, s in enumerate(alpha.symbols)}
        exact = np.array([[index[(v,)] for v in row] for row in rows], dtype=np.int64)
        return cls._assemble(n, k, exact, alpha, seed, "finite_alphabet")

    @classmethod
    def from_float(cls, values, seed=0):
        h = np.array(values, dtype=np.complex128 if np.iscomplexobj(values) else np.float64)
        return cls(h.shape[0], h.shape[1], h, "custom", seed)

    @classmethod
    def _assemble(cls, n, k, exact, alphabet, seed, ensemble):
        scale = math.sqrt(alphabet.scale_square(n))
        h = alphabet.values[exact] / scale
        return cls(n, k, np.ascontiguousarray(h), ensemble, seed, exact, alphabet)

    def to_json(self):
        h = self.entries_float
        if np.iscomplexobj(h):
            flt = [[[float(v.real), float(v.imag)] for v in row] for row in h]
        else:
            flt = h.tolist()
        return {
            "n": self.n_chips,
            "k": self.n_users,
            "ensemble": self.ensemble,
            "seed": self.seed,
            "alphabet": None if self.alphabet is None else self.alphabet.to_json(),
            "entries_exact": None if self.entries_exact is None else self.entries_exact.tolist(),
            "entries_float": flt,
        }

    def dumps(self):
        return json.dumps(self.to_json())

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, str):
            obj = json.loads(obj)
        n, k = int(obj["n"]), int(obj["k"])
        alpha = None if obj.get("alphabet") is None else Alphabet.from_json(obj["alphabet"])
        exact = obj.get("entries_exact")
        if exact is not None:
            exact = np.array(exact, dtype=np.int64).reshape(n, k)
        flt = obj["entries_float"]
        arr = np.array(flt, dtype=np.float64)
        if arr.ndim == 3:
            arr = arr[..., 0] + 1j * arr[..., 1]
        return cls(n, k, arr.reshape(n, k), obj["ensemble"], int(obj.get("seed", 0)), exact, alpha)

    def same_as(self, other):
        """Bit-level equality of both representations and metadata."""
        if (self.n_chips, self.n_users, self.ensemble, self.seed) != (
            other.n_chips,
            other.n_users,
            other.ensemble,
            other.seed,
        ):
            return False
        if (self.entries_exact is None) != (other.entries_exact is None):
            return False
        if self.entries_exact is not None and not np.array_equal(self.entries_exact, other.entries_exact):
            return False
        return self.entries_float.tobytes() == other.entries_float.tobytes() and self.alphabet == other.alphabet


@dataclass(frozen=True, eq=False)
class GramMatrix:
    """R = H^H H restricted to its real part (all that matters for real x).

    ``exact_r`` is the integer Gram matrix of the unscaled coordinates, so
    that ``r == exact_r / exact_scale``; for binary antipodal matrices
    ``exact_scale`` is N.
    """

    r: np.ndarray
    exact_r: np.ndarray | None = None
    exact_scale: int | None = None

    def quad(self, x):
        x = np.asarray(x, dtype=np.float64)
        return float(x @ self.r @ x)


def _check_dims(k, n):
    if int(k) < 1 or int(n) < 1:
        raise ArgumentError(f"need k >= 1 and n >= 1, got k={k}, n={n}")


def _check_seed(seed):
    if not 0 <= int(seed) <= MAX_SEED:
        raise ArgumentError(f"seed must be a 64-bit unsigned integer, got {seed}")


def _symbol_indices(k, n, alphabet, seed):
    u = rng.uniforms(rng.derive_key(seed, "entries"), rng.grid_counters(n, k))
    cum = np.cumsum([float(p) for p in alphabet.probabilities])
    idx = np.searchsorted(cum, u, side="right")
    return np.minimum(idx, len(alphabet.symbols) - 1).astype(np.int64)


def gen_finite_alphabet(k, n, alphabet, seed, *, _ensemble="finite_alphabet"):
    """Draw an N x K matrix with i.i.d. entries from ``alphabet``.

    Entry (i, j) depends only on (seed, i, j).  Raises ``AlphabetError``
    (via the alphabet) if its invariants fail.
    """
    _check_dims(k, n)
    _check_seed(seed)
    if not isinstance(alphabet, Alphabet):
        raise ArgumentError("alphabet must be an Alphabet")
    exact = _symbol_indices(int(k), int(n), alphabet, int(seed))
    return SpreadingMatrix._assemble(int(n), int(k), exact, alphabet, int(seed), _ensemble)


def gen_binary_antipodal(k, n, seed):
    """Entries uniform on {+1/sqrt(N), -1/sqrt(N)}; exact form stores +-1."""
    return gen_finite_alphabet(k, n, BINARY, seed, _ensemble="binary_antipodal")


def gen_gaussian(k, n, seed):
    """Entries i.i.d. N(0, 1/N); no exact representation."""
    _check_dims(k, n)
    _check_seed(seed)
    k, n = int(k), int(n)
    z = rng.normals(rng.derive_key(int(seed), "gaussian"), rng.grid_counters(n, k))
    return SpreadingMatrix(n, k, z / math.sqrt(n), "gaussian", int(seed))


def generate(ensemble, k, n, seed, alphabet=None):
    """Dispatch on the ensemble tag (also accepts the short names binary/finite)."""
    ensemble = {"binary": "binary_antipodal", "finite": "finite_alphabet"}.get(ensemble, ensemble)
    if ensemble == "binary_antipodal":
        return gen_binary_antipodal(k, n, seed)
    if ensemble == "gaussian":
        return gen_gaussian(k, n, seed)
    if ensemble == "finite_alphabet":
        if alphabet is None:
            raise ArgumentError("finite_alphabet ensemble needs an alphabet")
        return gen_finite_alphabet(k, n, alphabet, seed)
    raise ArgumentError(f"unknown ensemble {ensemble!r}")


def gram(h):
    """Gram matrix of the spreading matrix, with the exact integer form when available."""
    if h.exact_quadratic:
        z = h.integer_coords
        exact_r = z.T @ z
        s = h.quadratic_scale
        return GramMatrix(exact_r / s, exact_r, s)
    a = h.real_stack
    r = a.T @ a
    return GramMatrix((r + r.T) / 2)


def rational_rank(rows):
    """Rank over Q of a matrix of rationals, by fraction-free (Bareiss) elimination."""
    a = []
    for row in rows:
        row = [_frac(v) for v in row]
        den = 1
        for v in row:
            den = math.lcm(den, v.denominator)
        a.append([int(v * den) for v in row])
    if not a:
        return 0
    m, n = len(a), len(a[0])
    rank, prev = 0, 1
    for col in range(n):
        piv = next((r for r in range(rank, m) if a[r][col] != 0), None)
        if piv is None:
            continue
        a[rank], a[piv] = a[piv], a[rank]
        p = a[rank][col]
        for r in range(rank + 1, m):
            f = a[r][col]
            for c in range(col + 1, n):
                a[r][c] = (a[r][c] * p - f * a[rank][c]) // prev
            a[r][col] = 0
        prev = p
        rank += 1
        if rank == m:
            break
    return rank


def alphabet_rank(alphabet):
    """Dimension over Q of the symbol set (rank of its coordinate matrix)."""
    return rational_rank(alphabet.symbols)


def log3(k):
    """log base 3, exact for powers of three."""
    k = int(k)
    t = round(math.log(k, 3))
    if t >= 0 and 3**t == k:
        return float(t)
    return math.log(k) / math.log(3)


def zeta(k, n):
    """Normalised load K / (N log3 K)."""
    if int(k) < 2:
        raise ArgumentError("zeta needs k >= 2 (log3 k must be positive)")
    if int(n) < 1:
        raise ArgumentError("n must be positive")
    return k / (n * log3(k))


def chips_for_zeta(k, zeta_target):
    """Smallest chip count N with K / (N log3 K) <= zeta_target."""
    if int(k) < 2:
        raise ArgumentError("chips_for_zeta needs k >= 2")
    if not zeta_target > 0:
        raise ArgumentError("zeta must be positive")
    x = k / (zeta_target * log3(k))
    r = round(x)
    if abs(x - r) < 1e-9 * max(1.0, x):
        return max(1, int(r))
    return max(1, math.ceil(x))
