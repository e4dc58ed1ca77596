import math

import numpy as np
import pytest
from scipy import stats

from muefix.bounds import union_bound_binary
from muefix.errors import ArgumentError, ConfigError
from muefix.matrix import QPSK, SpreadingMatrix, gen_gaussian
from muefix.montecarlo import (
    ExperimentConfig,
    ber_simulate,
    chi2_gof_test,
    detecting_fraction,
    estimate_event_prob,
    eta_quantiles,
    records_to_csv,
    records_to_json,
    resolve_workers,
    run_experiment,
    weight_invariance_test,
)


def _cfg(**kw):
    base = {"estimator": "event_prob", "k_list": [6], "n": [6], "trials": 60, "base_seed": 3}
    base.update(kw)
    return ExperimentConfig.from_dict(base)


def test_defaults():
    cfg = ExperimentConfig.from_dict({"estimator": "event_prob", "k_list": [4], "n": 5})
    assert (cfg.trials, cfg.gamma, cfg.u, cfg.base_seed) == (100, 1.0, 1.5, 0)
    assert cfg.ensemble == "binary_antipodal"
    assert cfg.points() == [(4, 5)]


def test_every_problem_is_reported():
    with pytest.raises(ConfigError) as exc:
        ExperimentConfig.from_dict({"estimator": "event_prob", "k_list": [4], "n": 5, "gamma": 1.5, "trials": 0})
    text = " ".join(exc.value.problems)
    assert "(0, 1]" in text and "trials" in text
    with pytest.raises(ConfigError) as exc:
        ExperimentConfig.from_dict({"n": 5})
    assert "missing field: estimator" in exc.value.problems
    assert "missing field: k_list" in exc.value.problems


def test_zeta_target_points():
    cfg = ExperimentConfig.from_dict({"estimator": "event_prob", "k_list": [1, 9], "zeta": 0.3})
    assert cfg.points() == [(1, 1), (9, 15)]


def test_single_user_event_probability_is_zero():
    (rec,) = estimate_event_prob(_cfg(k_list=[1], n=[3]))
    assert rec.estimate == 0.0
    assert rec.zeta is None
    assert (rec.ci_low, rec.ci_high) == (0.0, 0.05)


def test_records_are_thread_count_invariant():
    cfg = _cfg(k_list=[6, 8], n=[6, 7], trials=80)
    one = records_to_csv(estimate_event_prob(cfg, workers=1))
    four = records_to_csv(estimate_event_prob(cfg, workers=4))
    assert one == four
    q1 = records_to_csv(eta_quantiles(_cfg(estimator="eta_quantiles", ensemble="gaussian"), workers=1))
    q4 = records_to_csv(eta_quantiles(_cfg(estimator="eta_quantiles", ensemble="gaussian"), workers=3))
    assert q1 == q4


def test_records_respect_interval_order():
    for rec in estimate_event_prob(_cfg(k_list=[6, 8, 10], n=[4, 6, 8], trials=50)):
        assert 0 <= rec.ci_low <= rec.estimate <= rec.ci_high <= 1


def test_event_probability_grows_with_load():
    lo, hi = estimate_event_prob(_cfg(k_list=[10, 10], n=[16, 11], trials=500))
    assert lo.zeta < hi.zeta
    assert lo.estimate <= hi.estimate + (hi.ci_high - hi.ci_low)


def test_single_user_quantiles_are_one():
    (rec,) = eta_quantiles(_cfg(estimator="eta_quantiles", k_list=[1], n=[5], trials=20))
    assert rec.extra == {"q_min": 1.0, "q05": 1.0, "q50": 1.0, "q95": 1.0}


def test_gaussian_quantiles_below_column_energy():
    cfg = _cfg(estimator="eta_quantiles", ensemble="gaussian", k_list=[8], n=[10], trials=40)
    (rec,) = eta_quantiles(cfg)
    assert rec.extra["q_min"] <= rec.extra["q05"] <= rec.extra["q50"] <= rec.extra["q95"]
    assert rec.ci_low <= rec.estimate <= rec.ci_high


def test_detecting_fraction_tiny_case_has_counterexamples():
    (rec,) = detecting_fraction(_cfg(estimator="detecting_fraction", k_list=[6], n=[2], trials=30))
    assert rec.estimate < 1


def test_detecting_fraction_square_qpsk():
    cfg = ExperimentConfig.from_dict(
        {"estimator": "detecting_fraction", "ensemble": "finite", "alphabet": "qpsk", "k_list": [3], "n": [3], "trials": 40}
    )
    (rec,) = detecting_fraction(cfg)
    assert 0 < rec.estimate <= 1
    assert cfg.alphabet == QPSK


def test_ber_tiny_noise_gives_no_errors():
    h = gen_gaussian(4, 8, 2)
    (pt,) = ber_simulate(h, [1e-3], 10_000, 1)
    assert pt.errors == 0
    assert pt.eta_hat == math.inf
    with pytest.raises(ArgumentError):
        ber_simulate(h, [0.5], 0, 1)


def test_ber_is_thread_count_invariant():
    h = gen_gaussian(3, 4, 2)
    a = ber_simulate(h, [0.8, 0.5], 20_000, 9, workers=1, batch=3000)
    b = ber_simulate(h, [0.8, 0.5], 20_000, 9, workers=4, batch=3000)
    assert a == b


def test_single_user_ber_matches_q_function():
    h = SpreadingMatrix.from_float([[1.0]])
    (pt,) = ber_simulate(h, [0.7], 200_000, 5)
    q = stats.norm.sf(1 / 0.7)
    sd = math.sqrt(q * (1 - q) / pt.bits)
    assert abs(pt.pe - q) < 4 * sd


def test_weight_invariance_identical_patterns():
    x = np.array([1, 1, 0, 0, 0])
    res = weight_invariance_test("binary_antipodal", 5, 6, 2, 500, 1, patterns=(x, x))
    assert res.passed
    assert res.statistic < res.critical


def test_weight_invariance_rejects_bad_weight():
    with pytest.raises(ArgumentError):
        weight_invariance_test("binary_antipodal", 4, 6, 5, 100, 1)


def test_chi2_single_column():
    assert chi2_gof_test(3, 16, 1, 2000, 8).passed


def test_run_experiment_dispatch_and_writers():
    cfg = ExperimentConfig.from_dict(
        {"estimator": "ber", "k_list": [2], "n": [4], "sigma_list": [0.6], "trials": 500, "base_seed": 1}
    )
    recs = run_experiment(cfg, workers=2)
    text = records_to_csv(recs)
    assert text.splitlines()[0] == "k,n,zeta,gamma,estimate,ci_low,ci_high,trials,seed,sigma,errors,bits,eta_hat"
    assert "wall_time" in records_to_csv(recs, timing=True).splitlines()[0]
    out = records_to_json(recs, cfg)
    assert out["config"]["estimator"] == "ber"
    assert out["records"][0]["k"] == 2


def test_resolve_workers(monkeypatch):
    monkeypatch.setenv("MUEFIX_THREADS", "3")
    assert resolve_workers(None) == 3
    assert resolve_workers(2) == 2
    with pytest.raises(ArgumentError):
        resolve_workers(0)


def test_event_probability_below_union_bound_when_bound_is_informative():
    cfg = _cfg(k_list=[8, 10], n=[75, 79], trials=2000, base_seed=11)
    for rec in estimate_event_prob(cfg):
        ub = union_bound_binary(rec.k, rec.n)
        assert ub.value < 1
        assert rec.ci_low <= ub.value
        assert rec.estimate <= ub.value
