"""Command line front end.

    estcombine rho --x 0.5 --y 1 --K 1000000
    estcombine reproduce --all --seed 42 --samples 1000000
    estcombine sweep --kind convex --K 10 --samples 1000000 --seed 1
    estcombine ais --problem rare --t 3 --K 10 --n 2000 --rule sqrt --seed 3

Exit status: 0 on success (for ``reproduce``: every row passed), 1 on a
runtime or I/O failure or a failed check, 2 on a usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys

import numpy as np

from . import ais, claims, ineff, varmodels
from .errors import EstCombineError
from .weights import SQRT_RULE, LastOnly, PowerLaw

log = logging.getLogger("estcombine")

RULES = {
    "sqrt": SQRT_RULE,
    "uniform": PowerLaw(0.0),
    "last": LastOnly(),
    "invvar": "invvar",
}


class UsageError(Exception):
    pass


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _write(text: str, out: str | None):
    if out is None or out == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _g6(v) -> str:
    if isinstance(v, tuple):
        return "[" + ", ".join(_g6(b) for b in v) + "]"
    return f"{v:.6g}"


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["claim_id", "paper_value", "computed_value", "tolerance", "pass"])
    for r in rows:
        d = r.to_json()
        pv = d["paper_value"]
        if isinstance(pv, list):
            pv = "[" + ";".join("" if b is None else repr(b) for b in pv) + "]"
        else:
            pv = repr(pv)
        writer.writerow([d["claim_id"], pv, repr(d["computed_value"]), repr(d["tolerance"]), str(d["pass"]).lower()])
    return buf.getvalue()


def cmd_rho(args) -> int:
    print(repr(ineff.rho(args.x, args.y, args.K)))
    return 0


def cmd_reproduce(args) -> int:
    if args.all:
        ids = list(claims.CLAIMS)
    else:
        ids = args.claims
        if not ids:
            raise UsageError("name at least one claim id or pass --all")
        unknown = [c for c in ids if c not in claims.CLAIMS]
        if unknown:
            raise UsageError(f"unknown claim id(s): {', '.join(unknown)}; known: {', '.join(claims.CLAIMS)}")
    cfg = claims.Settings(seed=args.seed, samples=args.samples, workers=varmodels.default_workers())
    rows = claims.evaluate(ids, cfg)
    for r in rows:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status}  {r.claim_id:<24} computed={_g6(r.computed_value):<12} target={_g6(r.paper_value)}", file=sys.stderr)
    fmt = args.format or ("csv" if (args.out or "").endswith(".csv") else "json")
    if fmt == "csv":
        text = rows_to_csv(rows)
    else:
        text = _dump_json({"seed": args.seed, "samples": args.samples, "rows": [r.to_json() for r in rows]})
    _write(text, args.out)
    return 0 if all(r.passed for r in rows) else 1


def cmd_sweep(args) -> int:
    if args.kind == "plateau":
        res = varmodels.sweep_plateau(args.k1max, args.k2max)
        obj = {"kind": "plateau", "k1max": args.k1max, "k2max": args.k2max,
               "max_rho": res.max_rho, "argmax": list(res.argmax)}
    else:
        res = varmodels.sweep_convex(args.K, args.samples, args.seed, args.threshold, varmodels.default_workers())
        obj = res.to_json()
    _write(_dump_json(obj), args.out)
    return 0


def _problem(args):
    if args.problem == "x2":
        return ais.light_tailed()
    return ais.rare_event(args.t)


def cmd_ais(args) -> int:
    problem = _problem(args)
    family = ais.gaussian_location()
    rule = RULES[args.rule]
    if args.replications <= 1:
        run = ais.run_adaptive(problem, family, args.K, args.n, args.seed)
        if rule == "invvar":
            rule = ais.inverse_variance_rule(run.stages)
        _write(_dump_json(run.to_json(rule, args.rule)), args.out)
        return 0
    reps = ais.replicate(problem, family, args.K, args.n, args.replications, args.seed,
                         workers=varmodels.default_workers())
    est, var = reps.pooled(rule)
    se = float(np.std(est, ddof=1) / math.sqrt(est.size))
    obj = {
        "problem": problem.name,
        "K": args.K,
        "n": args.n,
        "seed": args.seed,
        "rule": args.rule,
        "replications": args.replications,
        "true_mean": problem.true_mean,
        "mean": float(np.mean(est)),
        "std_error": se,
        "z": (float(np.mean(est)) - problem.true_mean) / se if se > 0 else 0.0,
        "mean_var_hat": float(np.mean(var)),
        "empirical_var": float(np.var(est, ddof=1)),
    }
    _write(_dump_json(obj), args.out)
    return 0


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be positive: {v}")
    return v


def _seed(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be in [0, 2**64)")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="estcombine", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("rho", help="inefficiency of k**x weights under k**-y variances")
    r.add_argument("--x", type=float, required=True)
    r.add_argument("--y", type=float, required=True)
    r.add_argument("--K", type=_positive_int, required=True)
    r.set_defaults(func=cmd_rho)

    rp = sub.add_parser("reproduce", help="check numeric claims and write a report")
    rp.add_argument("claims", nargs="*", metavar="CLAIM")
    rp.add_argument("--all", action="store_true")
    rp.add_argument("--seed", type=_seed, default=42)
    rp.add_argument("--samples", type=_positive_int, default=10**6)
    rp.add_argument("--format", choices=["json", "csv"])
    rp.add_argument("--out")
    rp.set_defaults(func=cmd_reproduce)

    sw = sub.add_parser("sweep", help="robustness sweeps over variance profiles")
    sw.add_argument("--kind", choices=["plateau", "convex"], required=True)
    sw.add_argument("--k1max", type=_positive_int, default=100)
    sw.add_argument("--k2max", type=_positive_int, default=100)
    sw.add_argument("--K", type=_positive_int, default=5)
    sw.add_argument("--samples", type=_positive_int, default=10**6)
    sw.add_argument("--seed", type=_seed, default=42)
    sw.add_argument("--threshold", type=float, default=varmodels.NINE_EIGHTHS)
    sw.add_argument("--out")
    sw.set_defaults(func=cmd_sweep)

    a = sub.add_parser("ais", help="adaptive importance sampling runs")
    a.add_argument("--problem", choices=["x2", "rare"], required=True)
    a.add_argument("--t", type=float, default=3.0)
    a.add_argument("--K", type=_positive_int, required=True)
    a.add_argument("--n", type=int, required=True)
    a.add_argument("--rule", choices=list(RULES), default="sqrt")
    a.add_argument("--seed", type=_seed, default=42)
    a.add_argument("--replications", type=_positive_int, default=1)
    a.add_argument("--out")
    a.set_defaults(func=cmd_ais)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"estcombine: error: {exc}", file=sys.stderr)
        return 2
    except EstCombineError as exc:
        log.error("%s", exc)
        return 2 if isinstance(exc, ValueError) else 1
    except OSError as exc:
        log.error("I/O failure: %s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
