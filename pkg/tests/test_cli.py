import io
import json
import subprocess
import sys

import pytest

from muefix.cli import load_config, run
from muefix.errors import ConfigError
from muefix.matrix import SpreadingMatrix

GOLDEN_HEADERS = {
    ("curve",): "zeta,eta_bound,tag",
    ("bounds", "--k", "8", "--n", "12"): "j,term_log2",
    ("ber", "--k", "2", "--n", "4", "--sigma", "0.7", "--trials", "200"):
        "sigma,pe,ci_low,ci_high,errors,bits,eta_hat,eta_hat_low,eta_hat_high",
    ("eta", "--k", "4", "--n", "4", "--format", "csv"): "eta,eta_exact,argmin,examined,pruned,method",
    ("detect", "--k", "4", "--n", "4", "--format", "csv"): "detecting,witness,cost,witness_verified",
}


def _run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


@pytest.mark.parametrize("argv,header", list(GOLDEN_HEADERS.items()))
def test_golden_csv_headers(argv, header):
    code, out, _ = _run(*argv)
    assert code == 0
    assert out.splitlines()[0] == header


def test_eta_json_is_deterministic():
    argv = ("eta", "--ensemble", "binary", "--k", "10", "--n", "12", "--seed", "42")
    code, first, _ = _run(*argv)
    assert code == 0
    assert _run(*argv)[1] == first
    out = json.loads(first)
    assert out["eta_exact"] == "1/3"
    assert out["argmin"] == [0, 0, 1, 0, -1, -1, 0, 0, 0, 1]


def test_curve_row():
    code, out, _ = _run("curve", "--zeta-min", "0.05", "--zeta-max", "1.0", "--steps", "96")
    assert code == 0
    assert "0.4375,0.5,lower_bound" in out.splitlines()


def test_detect_witness_verifies():
    code, out, _ = _run("detect", "--ensemble", "binary", "--k", "8", "--n", "4", "--seed", "1")
    assert code == 0
    verdict = json.loads(out)
    assert verdict["detecting"] is False
    assert verdict["witness_verified"] is True


def test_gen_round_trip(tmp_path):
    path = tmp_path / "h.json"
    assert _run("gen", "--ensemble", "finite", "--alphabet", "qpsk", "--k", "5", "--n", "3", "--seed", "7",
                "--output", str(path))[0] == 0
    h = SpreadingMatrix.from_json(path.read_text(encoding="utf-8"))
    assert h.shape == (3, 5)
    code, out, _ = _run("eta", "--matrix", str(path))
    assert code == 0 and json.loads(out)["eta_exact"] is not None


def test_exit_codes():
    assert _run("eta", "--bogus")[0] == 1
    assert _run("frobnicate")[0] == 1
    assert _run("eta", "--k", "0", "--n", "3")[0] == 1
    assert _run("bounds", "--k", "8", "--n", "12", "--gamma", "2")[0] == 1
    assert _run("eta", "--k", "25", "--n", "10")[0] == 2
    assert _run("eta", "--k", "21", "--n", "30", "--method", "brute_force")[0] == 2


def _write(tmp_path, obj):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(obj), encoding="utf-8")
    return path


def test_load_config(tmp_path):
    cfg = load_config(_write(tmp_path, {"estimator": "event_prob", "k_list": [1, 4], "zeta": 0.5}))
    assert (cfg.trials, cfg.gamma, cfg.u) == (100, 1.0, 1.5)
    with pytest.raises(ConfigError) as exc:
        load_config(_write(tmp_path, {"estimator": "event_prob", "k_list": [4], "n": 4, "gamma": 1.5}))
    assert any("(0, 1]" in p for p in exc.value.problems)


def test_sweep_with_single_user(tmp_path):
    path = _write(tmp_path, {"estimator": "event_prob", "k_list": [1], "n": 3, "trials": 10})
    code, out, _ = _run("sweep", "--config", str(path))
    assert code == 0
    assert out.splitlines() == ["k,n,zeta,gamma,estimate,ci_low,ci_high,trials,seed", "1,3,,1,0,0,0.3,10,0"]


def test_sweep_invalid_config(tmp_path):
    path = _write(tmp_path, {"estimator": "event_prob", "k_list": [4], "n": 4, "gamma": 1.5})
    code, _, err = _run("sweep", "--config", str(path))
    assert code == 1
    assert "(0, 1]" in err


def test_selftest_passes():
    code, out, _ = _run("selftest")
    assert code == 0
    assert out and all(line.startswith("PASS") for line in out.splitlines())


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "muefix.cli", "curve", "--steps", "8"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "zeta,eta_bound,tag"
