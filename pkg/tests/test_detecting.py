import pytest
from hypothesis import given
from hypothesis import strategies as st

from muefix.bounds import p_zero
from muefix.detecting import (
    detecting_threshold,
    is_detecting,
    is_detecting_for_inputs,
    row_zero_prob,
    verify_witness,
    wilson_interval,
)
from muefix.efficiency import eta_bruteforce
from muefix.errors import ArgumentError, UnsupportedEnsembleError
from muefix.matrix import BINARY, PM1_PM2, QPSK, SpreadingMatrix, gen_binary_antipodal, gen_finite_alphabet, gen_gaussian

from .oracles import has_ternary_null_vector


def test_small_non_detecting_example():
    h = SpreadingMatrix.from_exact([[1, 1, -1], [1, 1, 1]])
    v = is_detecting(h)
    assert not v.is_detecting
    assert v.witness.entries == (1, -1, 0)
    assert verify_witness(h, v.witness)


def test_identity_is_detecting():
    h = SpreadingMatrix.from_exact([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    assert is_detecting(h).is_detecting


@given(st.integers(1, 8), st.integers(1, 5), st.integers(0, 10**9))
def test_matches_exhaustive_oracle(k, n, seed):
    h = gen_binary_antipodal(k, n, seed)
    v = is_detecting(h)
    assert v.is_detecting == (not has_ternary_null_vector(h))
    if v.witness is not None:
        assert verify_witness(h, v.witness)


@given(st.integers(2, 7), st.integers(1, 3), st.integers(0, 10**9))
def test_detecting_iff_positive_eta(k, n, seed):
    for alpha in (QPSK, PM1_PM2):
        h = gen_finite_alphabet(k, n, alpha, seed)
        assert is_detecting(h).is_detecting == (eta_bruteforce(h).eta_exact > 0)


def test_fallback_agrees_with_table_search():
    for seed in range(15):
        h = gen_binary_antipodal(10, 5, seed)
        a = is_detecting(h)
        b = is_detecting(h, table_cap=10)
        assert a.is_detecting == b.is_detecting
        if b.witness is not None:
            assert verify_witness(h, b.witness)


def test_input_values_do_not_matter():
    h = gen_binary_antipodal(8, 4, 1)
    assert is_detecting_for_inputs(h, 0, 1) == is_detecting_for_inputs(h, -3, 7)
    with pytest.raises(ArgumentError):
        is_detecting_for_inputs(h, 1, 1)


def test_verdict_json():
    out = is_detecting(gen_binary_antipodal(8, 4, 1)).to_json()
    assert set(out) == {"detecting", "witness", "cost"}


def test_gaussian_is_rejected():
    with pytest.raises(UnsupportedEnsembleError):
        is_detecting(gen_gaussian(3, 3, 1))


def test_full_rank_square_is_detecting():
    h = SpreadingMatrix.from_exact([[2, 1, 0], [1, 3, 1], [0, 1, 4]])
    assert is_detecting(h).is_detecting


def test_wilson_interval():
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi
    assert (lo, hi) == pytest.approx((0.4038, 0.5962), abs=1e-4)
    assert wilson_interval(0, 1000) == (0.0, 0.003)
    lo, hi = wilson_interval(100, 100)
    assert hi == 1.0 and lo < 1.0


def test_row_zero_prob_binary():
    est, half = row_zero_prob(BINARY, 2, 100_000, 3)
    assert abs(est - p_zero(1)) < 4 * half
    est, _ = row_zero_prob(BINARY, 3, 10_000, 3)
    assert est == 0.0
    with pytest.raises(ArgumentError):
        row_zero_prob(BINARY, 2, 10, 3)


def test_row_zero_prob_qpsk_is_squared():
    # each of the two coordinates is an independent +-1 sum
    est, half = row_zero_prob(QPSK, 2, 100_000, 4)
    assert abs(est - 0.25) < 4 * half


def test_detecting_threshold():
    assert detecting_threshold(BINARY) == 0.5
    assert detecting_threshold(QPSK) == 1.0
