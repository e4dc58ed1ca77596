"""Seeded Monte Carlo experiments.

Every trial draws its matrix (and noise) from a seed derived from
(base_seed, point index, trial index), and results are stored by trial
index before reduction, so records do not depend on the number of worker
threads or on completion order.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import special, stats

from . import rng
from .detecting import is_detecting, wilson_interval
from .efficiency import eta as compute_eta
from .efficiency import ml_detect_batch
from .errors import ArgumentError, ConfigError, UnsupportedEnsembleError
from .matrix import Alphabet, chips_for_zeta, generate, named_alphabet, zeta

__all__ = [
    "ESTIMATORS",
    "ExperimentConfig",
    "ExperimentRecord",
    "KSResult",
    "BerPoint",
    "resolve_workers",
    "estimate_event_prob",
    "eta_quantiles",
    "detecting_fraction",
    "ber_simulate",
    "weight_invariance_test",
    "chi2_gof_test",
    "run_experiment",
    "records_to_csv",
    "records_to_json",
]

log = logging.getLogger(__name__)

ESTIMATORS = ("event_prob", "eta_quantiles", "detecting_fraction", "ber", "weight_invariance", "chi2_gof")
_ENSEMBLE_ALIASES = {"binary": "binary_antipodal", "finite": "finite_alphabet"}
KS_ALPHA = 0.01


def resolve_workers(threads=None):
    """Thread count: explicit value, else $MUEFIX_THREADS, else the core count."""
    if threads is None:
        env = os.environ.get("MUEFIX_THREADS")
        threads = int(env) if env else (os.cpu_count() or 1)
    threads = int(threads)
    if threads < 1:
        raise ArgumentError("thread count must be >= 1")
    return threads


def _map_indexed(fn, count, workers):
    """[fn(i) for i in range(count)] computed on a thread pool, in index order."""
    workers = resolve_workers(workers)
    if workers == 1 or count < 2:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(count), chunksize=max(1, count // (4 * workers))))


@dataclass
class ExperimentConfig:
    estimator: str
    k_list: tuple
    ensemble: str = "binary_antipodal"
    alphabet: Alphabet | None = None
    n_list: tuple | None = None
    zeta: float | None = None
    gamma: float = 1.0
    trials: int = 100
    base_seed: int = 0
    u: float = 1.5
    sigma_list: tuple = ()
    weight: int | None = None
    method: str = "branch_bound"

    def __post_init__(self):
        self.ensemble = _ENSEMBLE_ALIASES.get(self.ensemble, self.ensemble)
        self.k_list = tuple(self.k_list)
        if self.n_list is not None:
            if isinstance(self.n_list, int):
                self.n_list = (self.n_list,) * len(self.k_list)
            self.n_list = tuple(self.n_list)
        self.sigma_list = tuple(self.sigma_list)

    def violations(self):
        bad = []
        if self.estimator not in ESTIMATORS:
            bad.append(f"estimator must be one of {', '.join(ESTIMATORS)}")
        if self.ensemble not in ("binary_antipodal", "gaussian", "finite_alphabet"):
            bad.append("ensemble must be binary_antipodal, gaussian or finite_alphabet")
        if self.ensemble == "finite_alphabet" and self.alphabet is None:
            bad.append("finite_alphabet ensemble needs an alphabet")
        if not self.k_list:
            bad.append("k_list must be a nonempty list")
        elif any(not isinstance(k, int) or k < 1 for k in self.k_list):
            bad.append("every k must be an integer >= 1")
        if (self.n_list is None) == (self.zeta is None):
            bad.append("give exactly one of n (chip count) or zeta (target load)")
        if self.n_list is not None:
            if len(self.n_list) != len(self.k_list):
                bad.append("n must be one integer or a list as long as k_list")
            if any(not isinstance(n, int) or n < 1 for n in self.n_list):
                bad.append("every n must be an integer >= 1")
        if self.zeta is not None and not self.zeta > 0:
            bad.append("zeta must be positive")
        if not 0 < self.gamma <= 1:
            bad.append("gamma must lie in (0, 1]")
        if not isinstance(self.trials, int) or self.trials < 1:
            bad.append("trials must be an integer >= 1")
        if not isinstance(self.base_seed, int) or not 0 <= self.base_seed < 2**64:
            bad.append("base_seed must be a 64-bit unsigned integer")
        if not self.u > 1:
            bad.append("u must exceed 1")
        if self.estimator == "ber" and (not self.sigma_list or any(s <= 0 for s in self.sigma_list)):
            bad.append("ber estimator needs a nonempty sigma_list of positive values")
        if self.estimator in ("weight_invariance", "chi2_gof"):
            if self.weight is None or self.weight < 1:
                bad.append(f"{self.estimator} estimator needs weight >= 1")
            elif self.k_list and any(self.weight > k for k in self.k_list):
                bad.append("weight must not exceed k")
        if self.estimator == "chi2_gof" and self.ensemble != "gaussian":
            bad.append("chi2_gof estimator needs the gaussian ensemble")
        if self.estimator == "detecting_fraction" and self.ensemble == "gaussian":
            bad.append("detecting_fraction needs a finite alphabet ensemble")
        if self.method not in ("branch_bound", "brute_force"):
            bad.append("method must be branch_bound or brute_force")
        return bad

    def validate(self):
        bad = self.violations()
        if bad:
            raise ConfigError(bad)
        return self

    def points(self):
        """(k, n) pairs; with a zeta target N = ceil(K / (zeta log3 K)), and N = 1 for K = 1."""
        if self.n_list is not None:
            return list(zip(self.k_list, self.n_list))
        return [(k, chips_for_zeta(k, self.zeta) if k >= 2 else 1) for k in self.k_list]

    @classmethod
    def from_dict(cls, obj):
        """Build and validate a config; every problem is reported at once."""
        problems = []
        if not isinstance(obj, dict):
            raise ConfigError(["config must be a JSON object"])
        for name in ("estimator", "k_list"):
            if name not in obj:
                problems.append(f"missing field: {name}")
        known = {
            "estimator", "k_list", "ensemble", "alphabet", "n", "zeta", "gamma", "trials",
            "base_seed", "u", "sigma_list", "weight", "method",
        }
        problems += [f"unknown field: {name}" for name in sorted(set(obj) - known)]
        alphabet = obj.get("alphabet")
        try:
            if isinstance(alphabet, str):
                alphabet = named_alphabet(alphabet)
            elif isinstance(alphabet, dict):
                alphabet = Alphabet.from_json(alphabet)
        except ValueError as exc:
            problems.append(f"alphabet: {exc}")
            alphabet = None
        if problems:
            raise ConfigError(problems)
        k_list = obj["k_list"]
        cfg = cls(
            estimator=obj["estimator"],
            k_list=tuple(k_list) if isinstance(k_list, list) else (k_list,),
            ensemble=obj.get("ensemble", "binary_antipodal"),
            alphabet=alphabet,
            n_list=obj.get("n"),
            zeta=obj.get("zeta"),
            gamma=obj.get("gamma", 1.0),
            trials=obj.get("trials", 100),
            base_seed=obj.get("base_seed", 0),
            u=obj.get("u", 1.5),
            sigma_list=tuple(obj.get("sigma_list", ())),
            weight=obj.get("weight"),
            method=obj.get("method", "branch_bound"),
        )
        return cfg.validate()


@dataclass
class ExperimentRecord:
    k: int
    n: int
    zeta: float | None
    gamma: float
    estimate: float
    ci_low: float
    ci_high: float
    trials: int
    seed: int
    wall_time: float = 0.0
    extra: dict = field(default_factory=dict)

    def row(self, timing=False):
        out = {
            "k": self.k,
            "n": self.n,
            "zeta": self.zeta,
            "gamma": self.gamma,
            "estimate": self.estimate,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "trials": self.trials,
            "seed": self.seed,
        }
        out.update(self.extra)
        if timing:
            out["wall_time"] = self.wall_time
        return out


@dataclass(frozen=True)
class KSResult:
    statistic: float
    critical: float
    pvalue: float
    passed: bool
    samples: int


@dataclass(frozen=True)
class BerPoint:
    sigma: float
    pe: float
    ci_low: float
    ci_high: float
    errors: int
    bits: int
    eta_hat: float
    eta_hat_low: float
    eta_hat_high: float


def _zeta_or_none(k, n):
    return zeta(k, n) if k >= 2 else None


def _record(cfg, k, n, successes, t0, extra=None):
    lo, hi = wilson_interval(successes, cfg.trials)
    return ExperimentRecord(
        k, n, _zeta_or_none(k, n), cfg.gamma, successes / cfg.trials, lo, hi, cfg.trials, cfg.base_seed,
        time.perf_counter() - t0, extra or {},
    )


def _draw(cfg, k, n, point, trial):
    return generate(cfg.ensemble, k, n, rng.trial_seed(cfg.base_seed, point, trial), cfg.alphabet)


def estimate_event_prob(cfg, workers=None):
    """Fraction of random matrices whose efficiency is below gamma, per (k, n).

    For binary antipodal matrices with gamma = 1 every violation must come
    from an even-weight vector; this is asserted trial by trial.
    """
    cfg.validate()
    gamma_exact = Fraction(repr(float(cfg.gamma)))
    odd_weight_guard = cfg.ensemble == "binary_antipodal" and cfg.gamma == 1
    records = []
    for point, (k, n) in enumerate(cfg.points()):
        t0 = time.perf_counter()

        def trial(t, k=k, n=n, point=point):
            res = compute_eta(_draw(cfg, k, n, point, t), cfg.method)
            below = res.eta_exact < gamma_exact if res.eta_exact is not None else res.eta < cfg.gamma
            if below and odd_weight_guard:
                assert res.argmin.weight % 2 == 0, "odd-weight vector below 1 for binary antipodal spreading"
            return below

        hits = sum(_map_indexed(trial, cfg.trials, workers))
        records.append(_record(cfg, k, n, hits, t0))
    return records


def _median_ci(sorted_vals):
    t = len(sorted_vals)
    lo = int(stats.binom.ppf(0.025, t, 0.5))
    hi = int(stats.binom.ppf(0.975, t, 0.5))
    return float(sorted_vals[max(lo - 1, 0)]), float(sorted_vals[min(hi, t - 1)])


def eta_quantiles(cfg, workers=None):
    """Empirical min, 5%, 50% and 95% quantiles of the efficiency per (k, n).

    ``estimate`` is the median; the interval is the distribution-free 95%
    order-statistic interval for the median.
    """
    cfg.validate()
    records = []
    for point, (k, n) in enumerate(cfg.points()):
        t0 = time.perf_counter()
        vals = _map_indexed(lambda t, k=k, n=n, point=point: compute_eta(_draw(cfg, k, n, point, t), cfg.method).eta,
                            cfg.trials, workers)
        v = np.sort(np.array(vals))
        q = {
            "q_min": float(v[0]),
            "q05": float(np.quantile(v, 0.05, method="inverted_cdf")),
            "q50": float(np.quantile(v, 0.5, method="inverted_cdf")),
            "q95": float(np.quantile(v, 0.95, method="inverted_cdf")),
        }
        lo, hi = _median_ci(v)
        records.append(ExperimentRecord(
            k, n, _zeta_or_none(k, n), cfg.gamma, q["q50"], min(lo, q["q50"]), max(hi, q["q50"]),
            cfg.trials, cfg.base_seed, time.perf_counter() - t0, q,
        ))
    return records


def detecting_fraction(cfg, workers=None):
    """Fraction of random finite-alphabet matrices that are detecting, per (k, n)."""
    cfg.validate()
    records = []
    for point, (k, n) in enumerate(cfg.points()):
        t0 = time.perf_counter()

        def trial(t, k=k, n=n, point=point):
            h = _draw(cfg, k, n, point, t)
            if not h.is_exact:
                raise UnsupportedEnsembleError("detecting_fraction needs a finite alphabet")
            v = is_detecting(h)
            if not v.is_detecting:
                log.debug("k=%d n=%d trial=%d witness=%s", k, n, t, v.witness.entries)
            return v.is_detecting

        hits = sum(_map_indexed(trial, cfg.trials, workers))
        records.append(_record(cfg, k, n, hits, t0))
    return records


def _eta_hat(sigma, pe):
    if pe <= 0:
        return math.inf
    if pe >= 1:
        return 0.0
    return 2 * sigma * sigma * math.log(1 / pe)


def ber_simulate(h, sigma_list, trials, seed, workers=None, batch=1 << 12):
    """Bit error rate of the jointly optimal detector for each noise level.

    Data vectors are uniform on {+-1}^K, the noise is N(0, sigma^2 I) (per
    real dimension), and errors are pooled over users.  The efficiency
    estimate is 2 sigma^2 ln(1/Pe).
    """
    trials = int(trials)
    if trials < 1:
        raise ArgumentError("ber_simulate needs trials >= 1")
    k = h.n_users
    a = h.real_stack
    rows = a.shape[0]
    out = []
    for si, sigma in enumerate(sigma_list):
        sigma = float(sigma)
        if sigma <= 0:
            raise ArgumentError("noise levels must be positive")
        key_b = rng.derive_key(seed, "ber-bits", si)
        key_n = rng.derive_key(seed, "ber-noise", si)
        n_batches = -(-trials // batch)

        def run(bi, sigma=sigma, key_b=key_b, key_n=key_n):
            t0 = bi * batch
            t1 = min(trials, t0 + batch)
            off = np.uint64(t0) << np.uint64(32)
            b = np.where(rng.uniforms(key_b, rng.grid_counters(t1 - t0, k) + off) < 0.5, 1, -1)
            noise = rng.normals(key_n, rng.grid_counters(t1 - t0, rows) + off)
            y = b @ a.T + sigma * noise
            bh = ml_detect_batch_real(a, y)
            return int(np.count_nonzero(bh != b))

        errors = sum(_map_indexed(run, n_batches, workers))
        bits = trials * k
        pe = errors / bits
        lo, hi = wilson_interval(errors, bits)
        out.append(BerPoint(sigma, pe, lo, hi, errors, bits, _eta_hat(sigma, pe),
                            _eta_hat(sigma, hi), _eta_hat(sigma, lo)))
    return out


def ml_detect_batch_real(a, ys):
    """ML decisions for a real (already stacked) matrix; see efficiency.ml_detect_batch."""
    from .matrix import SpreadingMatrix

    return ml_detect_batch(SpreadingMatrix.from_float(a), ys)


def _quadratic_samples(ensemble, k, n, x, trials, seed, stream, alphabet=None):
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (k,) or not x.any():
        raise ArgumentError(f"pattern must be a nonzero length-{k} vector")
    vals = np.empty(trials)
    for t in range(trials):
        a = generate(ensemble, k, n, rng.trial_seed(seed, stream, t), alphabet).real_stack
        u = a @ x
        vals[t] = u @ u
    return vals


def _default_patterns(k, w):
    a = np.zeros(k, dtype=np.int64)
    a[:w] = 1
    b = np.zeros(k, dtype=np.int64)
    start = 1 if w < k else 0
    b[start : start + w] = np.where(np.arange(w) % 2 == 0, 1, -1)
    return a, b


def weight_invariance_test(ensemble, k, n, weight, trials, seed, alphabet=None, patterns=None):
    """Two-sample KS test that x^T R x has the same law for two patterns.

    By default the patterns are (+1, .., +1, 0, ..) and a shifted support
    with alternating signs, both of the given weight; ``patterns`` overrides
    them.  Each pattern gets its own independent matrix draws.  The test
    passes when the statistic is below the 1% critical value.
    """
    if not 1 <= int(weight) <= int(k):
        raise ArgumentError(f"weight must be in 1..{k}")
    xa, xb = patterns if patterns is not None else _default_patterns(int(k), int(weight))
    sa = _quadratic_samples(ensemble, k, n, xa, trials, seed, 0, alphabet)
    sb = _quadratic_samples(ensemble, k, n, xb, trials, seed, 1, alphabet)
    res = stats.ks_2samp(sa, sb)
    critical = math.sqrt(-0.5 * math.log(KS_ALPHA / 2)) * math.sqrt(2 / trials)
    return KSResult(float(res.statistic), critical, float(res.pvalue), bool(res.statistic < critical), trials)


def chi2_gof_test(k, n, j, trials, seed, dof=None):
    """One-sample KS test of (N/j) x^T R x against chi-squared with N dof.

    Gaussian spreading, x = +1 on the first j users.  ``dof`` swaps in a
    different reference law (used as a negative control).
    """
    k, n, j = int(k), int(n), int(j)
    if not 1 <= j <= k:
        raise ArgumentError(f"weight must be in 1..{k}")
    x = np.zeros(k)
    x[:j] = 1
    samples = _quadratic_samples("gaussian", k, n, x, trials, seed, 0) * (n / j)
    ref = n if dof is None else int(dof)
    res = stats.kstest(samples, lambda v: special.gammainc(ref / 2.0, np.maximum(v, 0) / 2.0))
    critical = float(stats.kstwo.ppf(1 - KS_ALPHA, trials))
    return KSResult(float(res.statistic), critical, float(res.pvalue), bool(res.statistic < critical), trials)


def _ks_record(cfg, k, n, res, t0):
    return ExperimentRecord(
        k, n, _zeta_or_none(k, n), cfg.gamma, res.statistic, res.statistic, res.statistic, cfg.trials,
        cfg.base_seed, time.perf_counter() - t0,
        {"critical": res.critical, "pvalue": res.pvalue, "passed": res.passed},
    )


def run_experiment(cfg, workers=None):
    """Run the estimator named in the config and return its records."""
    cfg.validate()
    if cfg.estimator == "event_prob":
        return estimate_event_prob(cfg, workers)
    if cfg.estimator == "eta_quantiles":
        return eta_quantiles(cfg, workers)
    if cfg.estimator == "detecting_fraction":
        return detecting_fraction(cfg, workers)
    records = []
    for point, (k, n) in enumerate(cfg.points()):
        t0 = time.perf_counter()
        seed = rng.derive_key(cfg.base_seed, "point", point)
        if cfg.estimator == "ber":
            h = generate(cfg.ensemble, k, n, cfg.base_seed, cfg.alphabet)
            for p in ber_simulate(h, cfg.sigma_list, cfg.trials, seed, workers):
                records.append(ExperimentRecord(
                    k, n, _zeta_or_none(k, n), cfg.gamma, p.pe, p.ci_low, p.ci_high, cfg.trials,
                    cfg.base_seed, time.perf_counter() - t0,
                    {"sigma": p.sigma, "errors": p.errors, "bits": p.bits, "eta_hat": p.eta_hat},
                ))
        elif cfg.estimator == "weight_invariance":
            res = weight_invariance_test(cfg.ensemble, k, n, cfg.weight, cfg.trials, seed, cfg.alphabet)
            records.append(_ks_record(cfg, k, n, res, t0))
        else:
            res = chi2_gof_test(k, n, cfg.weight, cfg.trials, seed)
            records.append(_ks_record(cfg, k, n, res, t0))
    return records


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".12g")
    return str(v)


def records_to_csv(records, timing=False):
    """CSV text, one row per record, with a stable column order."""
    buf = io.StringIO()
    if not records:
        return ""
    rows = [r.row(timing) for r in records]
    header = list(rows[0])
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(row.get(c)) for c in header])
    return buf.getvalue()


def _json_float(v):
    if isinstance(v, float):
        if math.isinf(v) or math.isnan(v):
            return None
        return float(format(v, ".12g"))
    return v


def records_to_json(records, cfg=None, timing=False):
    """Aggregate JSON-ready dict: the config echo plus every record."""
    out = {"records": [{k: _json_float(v) for k, v in r.row(timing).items()} for r in records]}
    if cfg is not None:
        out["config"] = {
            "estimator": cfg.estimator,
            "ensemble": cfg.ensemble,
            "alphabet": None if cfg.alphabet is None else cfg.alphabet.to_json(),
            "k_list": list(cfg.k_list),
            "n": None if cfg.n_list is None else list(cfg.n_list),
            "zeta": cfg.zeta,
            "gamma": cfg.gamma,
            "trials": cfg.trials,
            "base_seed": cfg.base_seed,
            "u": cfg.u,
            "sigma_list": list(cfg.sigma_list),
            "weight": cfg.weight,
            "method": cfg.method,
        }
    return out
