"""Command line front end: ``muefix <subcommand> [flags]``.

Exit status is 0 on success, 1 on a validation error and 2 when an
exhaustive search would exceed its size cap.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

from . import bounds, montecarlo, selftest
from .detecting import DEFAULT_TABLE_CAP, is_detecting, verify_witness
from .efficiency import DEFAULT_CAP, eta
from .errors import CapacityError, ConfigError
from .matrix import Alphabet, SpreadingMatrix, generate, named_alphabet

__all__ = ["main", "run", "load_config"]

ENSEMBLES = ("binary", "binary_antipodal", "gaussian", "finite", "finite_alphabet")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; 2 is reserved for capacity errors
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


def load_config(path):
    """Read and validate an experiment config from a JSON file."""
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError([f"cannot read config: {exc}"]) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config is not valid JSON: {exc}"]) from exc
    return montecarlo.ExperimentConfig.from_dict(obj)


def _round(v):
    if isinstance(v, float) and math.isfinite(v):
        return float(format(v, ".12g"))
    if isinstance(v, float):
        return None
    if isinstance(v, dict):
        return {k: _round(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_round(x) for x in v]
    return v


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if not math.isfinite(v):
            return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
        return format(v, ".12g")
    return str(v)


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _json(obj):
    return json.dumps(_round(obj), indent=2, sort_keys=False) + "\n"


def _alphabet_arg(value):
    if value is None:
        return None
    p = Path(value)
    if p.suffix == ".json" or p.exists():
        return Alphabet.from_json(json.loads(p.read_text(encoding="utf-8")))
    return named_alphabet(value)


def _matrix(args):
    if args.matrix:
        return SpreadingMatrix.from_json(Path(args.matrix).read_text(encoding="utf-8"))
    if args.k is None or args.n is None:
        raise _UsageError("either --matrix or both --k and --n are required")
    return generate(args.ensemble, args.k, args.n, args.seed, _alphabet_arg(args.alphabet))


def _cmd_gen(args):
    if args.format == "csv":
        raise _UsageError("gen writes JSON only")
    return _matrix(args).dumps() + "\n"


def _cmd_eta(args):
    res = eta(_matrix(args), args.method, args.cap)
    if args.format == "csv":
        return _csv(
            ["eta", "eta_exact", "argmin", "examined", "pruned", "method"],
            [[res.eta, "" if res.eta_exact is None else str(res.eta_exact), " ".join(map(str, res.argmin.entries)),
              res.vectors_examined, res.nodes_pruned, res.method_tag]],
        )
    return _json(res.to_json())


def _cmd_detect(args):
    h = _matrix(args)
    v = is_detecting(h, args.table_cap)
    out = v.to_json()
    out["witness_verified"] = None if v.witness is None else verify_witness(h, v.witness)
    if args.format == "csv":
        w = "" if v.witness is None else " ".join(map(str, v.witness.entries))
        return _csv(["detecting", "witness", "cost", "witness_verified"],
                    [[v.is_detecting, w, v.search_cost, out["witness_verified"]]])
    return _json(out)


def _cmd_bounds(args):
    if args.ensemble in ("gaussian",):
        ev = bounds.union_bound_gaussian(args.k, args.n, args.u, args.threshold)
    elif args.ensemble in ("binary", "binary_antipodal"):
        ev = bounds.union_bound_binary(args.k, args.n, args.u, args.gamma)
    else:
        raise _UsageError("bounds supports --ensemble binary or gaussian")
    if args.format == "csv":
        return _csv(["j", "term_log2"], ev.terms)
    out = ev.to_json()
    out["terms"] = [{"j": j, "term_log2": t} for j, t in ev.terms]
    return _json(out)


def _cmd_curve(args):
    grid = bounds.curve_grid(args.zeta_min, args.zeta_max, args.steps)
    pts = [bounds.efficiency_lower_bound(z) for z in grid]
    if args.format == "csv":
        return _csv(["zeta", "eta_bound", "tag"], [[p.zeta, p.eta_bound, p.tag] for p in pts])
    return _json([{"zeta": p.zeta, "eta_bound": p.eta_bound, "tag": p.tag} for p in pts])


def _cmd_sweep(args):
    cfg = load_config(args.config)
    records = montecarlo.run_experiment(cfg, args.threads)
    if args.format == "csv":
        return montecarlo.records_to_csv(records, timing=args.timing)
    return _json(montecarlo.records_to_json(records, cfg, timing=args.timing))


def _cmd_ber(args):
    h = _matrix(args)
    pts = montecarlo.ber_simulate(h, args.sigma, args.trials, args.seed, args.threads)
    header = ["sigma", "pe", "ci_low", "ci_high", "errors", "bits", "eta_hat", "eta_hat_low", "eta_hat_high"]
    rows = [[p.sigma, p.pe, p.ci_low, p.ci_high, p.errors, p.bits, p.eta_hat, p.eta_hat_low, p.eta_hat_high]
            for p in pts]
    if args.format == "csv":
        return _csv(header, rows)
    return _json([dict(zip(header, r)) for r in rows])


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _seed(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--output", help="write to this file instead of stdout")
    common.add_argument("--threads", type=_positive_int, default=None,
                        help="worker threads (default $MUEFIX_THREADS or the core count)")
    common.add_argument("--seed", type=_seed, default=0)

    source = argparse.ArgumentParser(add_help=False)
    source.add_argument("--matrix", help="JSON file written by 'gen'")
    source.add_argument("--ensemble", choices=ENSEMBLES, default="binary")
    source.add_argument("--alphabet", help="built-in alphabet name or JSON file")
    source.add_argument("--k", type=_positive_int)
    source.add_argument("--n", type=_positive_int)

    p = _Parser(prog="muefix", description="Multiuser efficiency and detecting-matrix toolkit.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("gen", parents=[common, source], help="generate and serialize a spreading matrix")
    s.set_defaults(fn=_cmd_gen, default_format="json")

    s = sub.add_parser("eta", parents=[common, source], help="exact multiuser efficiency")
    s.add_argument("--method", choices=("branch_bound", "brute_force"), default="branch_bound")
    s.add_argument("--cap", type=_positive_int, default=DEFAULT_CAP)
    s.set_defaults(fn=_cmd_eta, default_format="json")

    s = sub.add_parser("detect", parents=[common, source], help="exact detecting-matrix check")
    s.add_argument("--table-cap", type=_positive_int, default=DEFAULT_TABLE_CAP)
    s.set_defaults(fn=_cmd_detect, default_format="json")

    s = sub.add_parser("bounds", parents=[common], help="union bound terms for (K, N)")
    s.add_argument("--ensemble", choices=ENSEMBLES, default="binary")
    s.add_argument("--k", type=_positive_int, required=True)
    s.add_argument("--n", type=_positive_int, required=True)
    s.add_argument("--gamma", type=float, default=1.0)
    s.add_argument("--u", type=float, default=bounds.DEFAULT_U)
    s.add_argument("--threshold", type=float, default=None, help="weight-1 threshold (gaussian only)")
    s.set_defaults(fn=_cmd_bounds, default_format="csv")

    s = sub.add_parser("curve", parents=[common], help="asymptotic efficiency lower bound versus load")
    s.add_argument("--zeta-min", type=float, default=0.05)
    s.add_argument("--zeta-max", type=float, default=1.0)
    s.add_argument("--steps", type=_positive_int, default=96)
    s.set_defaults(fn=_cmd_curve, default_format="csv")

    s = sub.add_parser("sweep", parents=[common], help="run an experiment config file")
    s.add_argument("--config", required=True)
    s.add_argument("--timing", action="store_true", help="include the wall_time column")
    s.set_defaults(fn=_cmd_sweep, default_format="csv")

    s = sub.add_parser("ber", parents=[common, source], help="bit error rate of the optimum detector")
    s.add_argument("--sigma", type=float, nargs="+", required=True)
    s.add_argument("--trials", type=_positive_int, default=10000)
    s.set_defaults(fn=_cmd_ber, default_format="csv")

    s = sub.add_parser("selftest", parents=[common], help="run the library invariant checks")
    s.set_defaults(fn=None, default_format="csv")
    return p


def run(argv=None, stdout=None, stderr=None):
    """Parse ``argv`` and execute one subcommand; returns the exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = _parser().parse_args(argv)
        args.format = args.format or args.default_format
        if args.command == "selftest":
            return 0 if selftest.run(lambda line: print(line, file=stdout)) else 1
        text = args.fn(args)
    except _UsageError as exc:
        print(exc, file=stderr)
        return 1
    except CapacityError as exc:
        print(f"muefix: capacity exceeded: {exc}", file=stderr)
        return 2
    except ConfigError as exc:
        print("muefix: invalid config:", file=stderr)
        for problem in exc.problems:
            print(f"  - {problem}", file=stderr)
        return 1
    except (ValueError, KeyError, OSError) as exc:
        print(f"muefix: error: {exc}", file=stderr)
        return 1
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        stdout.write(text)
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
