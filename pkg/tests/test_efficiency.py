import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from muefix.efficiency import (
    TernaryVector,
    eta,
    eta_branch_bound,
    eta_bruteforce,
    eta_for_error_vector,
    min_over_weight,
    ml_detect,
    ml_detect_batch,
)
from muefix.errors import ArgumentError, CapacityError
from muefix.matrix import QPSK, SPARSE_TERNARY, SpreadingMatrix, gen_binary_antipodal, gen_finite_alphabet, gen_gaussian

from .oracles import canonical_vectors, eta_exact_oracle, eta_float_oracle, ml_oracle

# (ensemble args, eta, argmin) computed by the pure-python oracle
FROZEN = [
    (("binary", 10, 12, 42), Fraction(1, 3), (0, 0, 1, 0, -1, -1, 0, 0, 0, 1)),
    (("binary", 6, 4, 7), Fraction(0), (0, 0, 0, 1, 1, 0)),
    (("qpsk", 5, 3, 11), Fraction(2, 3), (0, 0, 0, 1, -1)),
]


def _make(kind, k, n, seed):
    if kind == "binary":
        return gen_binary_antipodal(k, n, seed)
    if kind == "qpsk":
        return gen_finite_alphabet(k, n, QPSK, seed)
    return gen_gaussian(k, n, seed)


def test_ternary_vector_is_canonical():
    v = TernaryVector((0, -1, 1, 0))
    assert v.entries == (0, 1, -1, 0)
    assert v.weight == 2
    with pytest.raises(ArgumentError):
        TernaryVector((2, 0))


def test_canonical_vector_count():
    for k in range(1, 7):
        assert sum(1 for _ in canonical_vectors(k)) == (3**k - 1) // 2


@pytest.mark.parametrize("args,value,argmin", FROZEN)
def test_frozen_oracle_values(args, value, argmin):
    h = _make(*args)
    for res in (eta_bruteforce(h), eta_branch_bound(h)):
        assert res.eta_exact == value
        assert res.argmin.entries == argmin
        assert res.eta == float(value)


def test_bruteforce_counts_every_vector():
    h = gen_binary_antipodal(7, 9, 2)
    assert eta_bruteforce(h).vectors_examined == (3**7 - 1) // 2


@given(st.integers(1, 8), st.integers(1, 9), st.integers(0, 2**64 - 1))
def test_searches_match_exact_oracle(k, n, seed):
    h = gen_binary_antipodal(k, n, seed)
    value, arg = eta_exact_oracle(h)
    for res in (eta_bruteforce(h), eta_branch_bound(h)):
        assert res.eta_exact == value
        assert res.argmin.entries == arg


@given(st.integers(1, 7), st.integers(1, 8), st.integers(0, 10**6))
def test_gaussian_searches_match_float_oracle(k, n, seed):
    h = gen_gaussian(k, n, seed)
    value, _ = eta_float_oracle(h)
    bf, bb = eta_bruteforce(h), eta_branch_bound(h)
    assert bf.eta == pytest.approx(value, rel=1e-12, abs=1e-14)
    assert bb.eta == pytest.approx(bf.eta, rel=1e-9, abs=1e-14)


@given(st.integers(2, 6), st.integers(1, 4), st.integers(0, 10**6))
def test_finite_alphabet_matches_oracle(k, n, seed):
    for alpha in (QPSK, SPARSE_TERNARY):
        h = gen_finite_alphabet(k, n, alpha, seed)
        value, _ = eta_exact_oracle(h)
        assert eta_bruteforce(h).eta_exact == value
        assert eta_branch_bound(h).eta_exact == value


def test_eta_for_error_vector_is_exact():
    h = SpreadingMatrix.from_exact([[1, 1, -1], [1, -1, 1], [1, 1, 1]])
    assert eta_for_error_vector(h, (1, 1, 0)) == Fraction(8, 3)
    assert eta_for_error_vector(h, (1, 0, 0)) == 1
    with pytest.raises(ArgumentError):
        eta_for_error_vector(h, (0, 0, 0))


def test_single_user_eta_is_column_energy():
    assert eta(gen_binary_antipodal(1, 5, 3)).eta_exact == 1
    h = gen_gaussian(1, 6, 3)
    assert eta(h).eta == pytest.approx(float(h.entries_float[:, 0] @ h.entries_float[:, 0]))


def test_eta_at_most_smallest_column_energy():
    h = gen_gaussian(8, 10, 4)
    norms = np.sum(h.entries_float**2, axis=0)
    assert eta(h).eta <= norms.min() + 1e-15


def test_min_over_weight_matches_oracle():
    h = gen_binary_antipodal(6, 5, 13)
    z = h.integer_coords
    for w in range(1, 7):
        best = min(
            int(((z @ np.array(x)) ** 2).sum())
            for x in canonical_vectors(6)
            if sum(1 for v in x if v) == w
        )
        assert min_over_weight(h, w) == Fraction(best, 5)
    assert min(min_over_weight(h, w) for w in range(1, 7)) == eta(h).eta_exact


def test_capacity_errors():
    with pytest.raises(CapacityError):
        eta_bruteforce(gen_binary_antipodal(21, 30, 1))
    with pytest.raises(CapacityError):
        eta_branch_bound(gen_binary_antipodal(25, 10, 1))


def test_branch_bound_handles_full_rank_beyond_bruteforce_cap():
    h = gen_gaussian(24, 60, 1)
    res = eta_branch_bound(h)
    assert 0 < res.eta <= np.sum(h.entries_float**2, axis=0).min()
    assert eta_for_error_vector(h, res.argmin) == pytest.approx(res.eta)


def test_unknown_method():
    with pytest.raises(ArgumentError):
        eta(gen_binary_antipodal(2, 2, 1), method="magic")


def test_ml_detect_matches_oracle():
    rng = np.random.default_rng(5)
    h = gen_gaussian(5, 6, 2)
    ys = h.entries_float @ rng.choice([-1.0, 1.0], size=(40, 5)).T + 0.8 * rng.standard_normal((6, 40))
    ys = ys.T
    got = ml_detect_batch(h, ys)
    for y, b in zip(ys, got):
        assert np.array_equal(b, ml_oracle(h.real_stack, y))
    assert np.array_equal(ml_detect(h, ys[0]), got[0])


def test_ml_detect_noiseless_and_ties():
    h = gen_binary_antipodal(4, 8, 1)
    for b in itertools.product((1, -1), repeat=4):
        y = h.entries_float @ np.array(b, dtype=float)
        assert ml_detect(h, y).tolist() == list(b) or eta(h).eta_exact == 0
    # zero observation: every candidate ties with its negative, +1 wins
    assert ml_detect(gen_binary_antipodal(1, 3, 1), np.zeros(3)).tolist() == [1]
